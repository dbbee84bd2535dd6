"""Run configuration: one YAML (or JSON) tree validated against SCHEMA.

    Every leaf is (type, default, check). check is None or a predicate on
    the converted value. Sections are nested dicts.
"""

import copy
import json
import logging
import yaml

from .errors import ConfigError

logger = logging.getLogger(__name__)


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _fraction(v):
    return 0.0 < v <= 1.0


def _positive_list(v):
    return len(v) > 0 and all(float(x) > 0 for x in v)


def _nonneg_list(v):
    return len(v) > 0 and all(float(x) >= 0 for x in v)


SUITE_ALL = 'all'

SCHEMA = {
    'model': {
        'alpha':     (float, 1.5, lambda v: 1.0 < v < 2.0),
        'dim':       (int, 1, lambda v: v in (1, 2, 3)),
        'horizon_T': (float, 1.0, _positive),
    },
    'domain': {
        'kind':   (str, 'UnitInterval', lambda v: v in ('UnitInterval', 'Ball')),
        'radius': (float, 1.0, _positive),
        'center': (list, None, None),
    },
    'drift': {
        'kind':        (str, 'zero', lambda v: v in ('zero', 'constant', 'closed_form', 'tabulated')),
        'value':       (list, None, None),
        'expressions': (list, None, None),
        'table':       (str, None, None),
        'rho_clamp':   (float, 1e-6, _positive),
        'factor':      (float, 1.0, None),
    },
    'gaussian': {
        'eigen_truncation':  (int, 2000, _positive),
        'image_truncation':  (int, 3, _positive),
        'route_switch_time': (float, 0.05, _positive),
        'target_rel_tol':    (float, 1e-10, _positive),
    },
    'spectral': {
        'interval_cap':        (int, 50000, _positive),
        'ball_cap':            (int, 2000, _positive),
        'decay_exponent':      (float, 40.0, _positive),
        'target_rel_tol':      (float, 1e-10, _positive),
        'subordination_nodes': (int, 16, _positive),
        'subordination_panel': (float, 0.5, _positive),
        'subordination_decay': (float, 50.0, _positive),
    },
    'perturbation': {
        'delta0':             (float, None, _positive),
        'max_terms':          (int, 6, lambda v: v >= 2),
        'series_tol':         (float, 1e-10, _positive),
        'n_modes':            (int, 256, _positive),
        'time_steps':         (int, 8, _positive),
        'step_nodes':         (int, 4, _positive),
        'space_nodes':        (int, 12, _positive),
        'check_time_nodes':   (int, 12, _positive),
        'check_space_nodes':  (int, 10, _positive),
        'contour_points':     (int, 16, _positive),
        'contraction_target': (float, 0.25, lambda v: 0.0 < v < 0.5),
        'schedule_levels':    (int, 30, _positive),
        'probe_resolution':   (int, 5, _positive),
        'probe_refinement':   (int, 2, _nonneg),
        'generator_modes':    (int, 512, _positive),
        'chain_panels':       (int, 64, _positive),
        'test_function':      (dict, None, None),
    },
    'kato': {
        'gammas':     (list, [0.0, 0.25], _nonneg_list),
        'delta_grid': (list, [0.4, 0.2, 0.1, 0.05], _positive_list),
        't_probes':   (int, 16, _positive),
    },
    'mc': {
        'n_paths':         (int, 100000, _positive),
        'bins':            (int, 20, _positive),
        'bridge_substeps': (int, 64, _positive),
        'chunk_size':      (int, 20000, _positive),
        'bootstrap':       (int, 200, _positive),
        't':               (float, 0.2, _positive),
        'x0':              (list, None, None),
    },
    'sweep': {
        'n_tuples':     (int, 2000, _positive),
        'times':        (list, [0.01, 0.1, 1.0], _positive_list),
        'rho_min':      (float, 1e-3, _positive),
        'kernel_times': (list, [0.05, 0.2, 1.0], _positive_list),
        'grid_points':  (int, 20, _positive),
    },
    'verify': {
        'suites':            (list, [SUITE_ALL], None),
        'cross_route_tol':   (float, 1e-6, _positive),
        'ratio_cap':         (float, 1e3, _positive),
        'stability':         (float, 0.1, _positive),
        'ck_tol':            (float, 1e-8, _positive),
        'laplace_tol':       (float, 1e-8, _positive),
        'convolution_tol':   (float, 1e-6, _positive),
        'orthonormal_tol':   (float, 1e-6, _positive),
        'mass_slack':        (float, 1e-8, _positive),
        'duhamel_tol':       (float, 1e-3, _positive),
        'fubini_tol':        (float, 1e-3, _positive),
        'chain_tol':         (float, 1e-3, _positive),
        'refinement_ratio':  (float, 2.0, _positive),
        'refinement_floor':  (float, 1e-9, _positive),
        'generator_tol':     (float, 1e-3, _positive),
        'degeneracy_tol':    (float, 1e-10, _positive),
        'decay_slack':       (float, 0.05, _nonneg),
        'pp_factor':         (float, 2.0, _positive),
        'sampler_sigma':     (float, 4.0, _positive),
        'sampler_draws':     (int, 1000000, _positive),
        'mc_sigma':          (float, 3.0, _positive),
        'mc_bin_fraction':   (float, 0.95, _fraction),
        'n_probes':          (int, 20, _positive),
    },
    'seed': (int, 0, _nonneg),
    'out':  (str, 'out', None),
}


def _convert(kind, value, path):
    if value is None:
        return None
    if kind is float:
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                raise ConfigError("%s must be a number" % path, path)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError("%s must be a number" % path, path)
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError("%s must be an integer" % path, path)
        return int(value)
    if kind is list and not isinstance(value, (list, tuple)):
        raise ConfigError("%s must be a list" % path, path)
    if kind is list:
        return list(value)
    if not isinstance(value, kind):
        raise ConfigError("%s must be a %s" % (path, kind.__name__), path)
    return value


def _validate(schema, tree, prefix=''):
    if not isinstance(tree, dict):
        raise ConfigError("%s must be a mapping" % (prefix or 'config'), prefix or None)
    unknown = sorted(set(tree) - set(schema))
    if unknown:
        key = prefix + unknown[0]
        raise ConfigError("unknown config key %s" % key, key)
    out = {}
    for key, entry in schema.items():
        path = prefix + key
        if isinstance(entry, dict):
            out[key] = _validate(entry, tree.get(key) or {}, path + '.')
            continue
        kind, default, check = entry
        value = _convert(kind, tree.get(key, copy.deepcopy(default)), path)
        if value is not None and check is not None and not check(value):
            raise ConfigError("%s has invalid value %r" % (path, value), path)
        out[key] = value
    return out


class RunConfig(object):
    """ A validated configuration tree with attribute access by section. """

    def __init__(self, tree=None):
        self.set_save_state(tree or {})

    @classmethod
    def from_dict(cls, tree):
        return cls(tree)

    @classmethod
    def load(cls, path):
        # YAML 1.1 reads exponents without a dot (1e-10) as strings
        parse = json.load if path.endswith('.json') else yaml.safe_load
        with open(path) as handle:
            try:
                tree = parse(handle)
            except (yaml.YAMLError, ValueError) as err:
                raise ConfigError("cannot parse %s: %s" % (path, err))
        logger.info("config loaded from %s", path)
        return cls(tree or {})

    def get_save_state(self):
        return copy.deepcopy(self.tree)

    def set_save_state(self, state):
        self.tree = _validate(SCHEMA, state)
        model = self.tree['model']
        if self.tree['domain']['kind'] == 'UnitInterval' and model['dim'] != 1:
            raise ConfigError("model.dim must be 1 on the unit interval", 'model.dim')

    def __getitem__(self, section):
        return self.tree[section]

    def override(self, out=None, seed=None, suites=None):
        """ CLI flags take precedence over the file. """
        state = self.get_save_state()
        if out is not None:
            state['out'] = out
        if seed is not None:
            state['seed'] = seed
        if suites is not None:
            state['verify']['suites'] = list(suites)
        self.set_save_state(state)
        return self

    def dump(self, path):
        with open(path, 'w') as handle:
            json.dump(self.tree, handle, sort_keys=True, indent=2)
            handle.write('\n')
