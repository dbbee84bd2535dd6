from setuptools import setup
setup(name='pyfracheat',
      description='Numerical laboratory for fractional heat kernels with drift on intervals and balls',
      version='0.1',
      packages=['pyfracheat',
                'pyfracheat.domain',
                'pyfracheat.kernels',
                'pyfracheat.subordinator',
                'pyfracheat.kato',
                'pyfracheat.duhamel',
                'pyfracheat.montecarlo',
                'pyfracheat.test'],
      package_dir={'pyfracheat':'pyfracheat'},
      package_data={'pyfracheat':['configs/*.yaml']},
      install_requires=['numpy', 'scipy', 'PyYAML'],
      entry_points={'console_scripts': ['pyfracheat = pyfracheat.pyfracheat:main']}
      )
