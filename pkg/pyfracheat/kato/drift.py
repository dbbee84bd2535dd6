"""Drift fields b(t, x) on a model domain.

    Constant     fixed vector
    ClosedForm   one expression per component, e.g. "0.5*rho(x)^-0.9" or
                 "sin(pi*x1)*exp(-t)"
    Tabulated    samples on a tensor grid in (t, x1..xd), multilinear
                 interpolation
"""

import ast
import csv
import logging
import re
import numpy as np
from scipy import interpolate

from ..domain.model import as_points, point_norm
from ..errors import RejectedInput, ExtrapolationError

logger = logging.getLogger(__name__)

ZERO = 'zero'
CONSTANT = 'constant'
CLOSED_FORM = 'closed_form'
TABULATED = 'tabulated'

FUNCTIONS = {'exp': np.exp, 'sqrt': np.sqrt, 'sin': np.sin, 'cos': np.cos}
CONSTANTS = {'pi': np.pi, 'e': np.e}

_ALLOWED_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load,
                  ast.Constant, ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow,
                  ast.USub, ast.UAdd)

_RHO = re.compile(r'rho\s*\(\s*x\s*\)')
_NORM = re.compile(r'\|\s*x\s*\|')


def compile_expression(text, dim):
    """ Validate a drift expression and return (code, uses_time).

        Grammar: numbers, + - * / ^, parentheses, rho(x), |x|, x1..xd
        (x alone when dim == 1), t, pi, e and exp/sqrt/sin/cos calls.
    """
    source = _NORM.sub(' _norm_x ', _RHO.sub(' _rho_x ', str(text))).replace('^', '**')
    try:
        tree = ast.parse(source.strip(), mode='eval')
    except SyntaxError as err:
        raise RejectedInput("cannot parse drift expression %r: %s" % (text, err.msg))
    names = {'t', '_rho_x', '_norm_x'} | set(CONSTANTS) | {'x%d' % (k + 1) for k in range(dim)}
    if dim == 1:
        names.add('x')
    uses_time = False
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise RejectedInput("drift expression %r uses unsupported syntax %s"
                                % (text, type(node).__name__))
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS or len(node.args) != 1 \
                    or node.keywords:
                raise RejectedInput("drift expression %r calls an unsupported function" % (text,))
        elif isinstance(node, ast.Name) and node.id not in FUNCTIONS:
            if node.id not in names:
                raise RejectedInput("unknown name %r in drift expression %r" % (node.id, text))
            uses_time = uses_time or node.id == 't'
        elif isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise RejectedInput("drift expression %r has a non-numeric constant" % (text,))
    return compile(tree, '<drift>', 'eval'), uses_time


class DriftField(object):
    """ b(t, x) with values shaped (n, dim). """

    def __init__(self, domain, kind=ZERO, value=None, expressions=None, table=None,
                 rho_clamp=1e-6, factor=1.0):
        self.domain    = domain
        self.kind      = kind
        self.rho_clamp = float(rho_clamp)
        self.factor    = float(factor)
        self.value       = None
        self.expressions = None
        self.table       = None
        self._codes      = None
        self._interp     = None
        self._clamp_logged = False
        d = domain.dim
        if kind == ZERO:
            self.value = np.zeros(d)
        elif kind == CONSTANT:
            self.value = np.asarray(value, dtype=float).reshape(-1)
            if self.value.shape != (d,):
                raise RejectedInput("constant drift needs %d components" % d)
            if not np.all(np.isfinite(self.value)):
                raise RejectedInput("constant drift must be finite")
        elif kind == CLOSED_FORM:
            if isinstance(expressions, str):
                expressions = [expressions]
            if expressions is None or len(expressions) != d:
                raise RejectedInput("closed-form drift needs %d expressions" % d)
            self.expressions = [str(e) for e in expressions]
            compiled = [compile_expression(e, d) for e in self.expressions]
            self._codes = [c for c, _ in compiled]
            self._uses_time = any(u for _, u in compiled)
        elif kind == TABULATED:
            self.table = table
            self._interp = self._build_interpolator(table)
        else:
            raise RejectedInput("unknown drift kind %r" % (kind,))
        if not self.rho_clamp > 0:
            raise RejectedInput("rho_clamp must be positive")

    # -- construction helpers ------------------------------------------------

    @classmethod
    def from_spec(cls, spec, domain):
        spec = dict(spec or {})
        kind = spec.get('kind', ZERO)
        table = spec.get('table')
        if kind == TABULATED and isinstance(table, str):
            table = load_table(table, domain.dim)
        return cls(domain, kind, spec.get('value'), spec.get('expressions'), table,
                   spec.get('rho_clamp', 1e-6), spec.get('factor', 1.0))

    def get_save_state(self):
        state = {'kind': self.kind, 'rho_clamp': self.rho_clamp, 'factor': self.factor}
        if self.kind == CONSTANT:
            state['value'] = [float(v) for v in self.value]
        elif self.kind == CLOSED_FORM:
            state['expressions'] = list(self.expressions)
        elif self.kind == TABULATED:
            state['table'] = {'shape': [len(axis) for axis in self.table['axes']]}
        return state

    def scaled(self, c):
        """ The drift c * b. """
        return DriftField(self.domain, self.kind, self.value, self.expressions, self.table,
                          self.rho_clamp, self.factor * float(c))

    def negated(self):
        return self.scaled(-1.0)

    def _build_interpolator(self, table):
        if table is None:
            raise RejectedInput("tabulated drift needs a table")
        axes = [np.asarray(a, dtype=float) for a in table['axes']]
        values = np.asarray(table['values'], dtype=float)
        d = self.domain.dim
        if len(axes) != d + 1 or values.shape != tuple(len(a) for a in axes) + (d,):
            raise RejectedInput("table must have axes (t, x1..x%d) and values of matching shape" % d)
        lo, hi = self.domain.bounding_box()
        for k in range(d):
            if axes[k + 1][0] > lo[k] or axes[k + 1][-1] < hi[k]:
                raise RejectedInput("drift table does not cover the domain along x%d" % (k + 1))
        return interpolate.RegularGridInterpolator(axes, values, method='linear', bounds_error=True)

    # -- evaluation ----------------------------------------------------------

    @property
    def is_zero(self):
        return self.kind == ZERO or self.factor == 0.0 or (self.kind == CONSTANT and not np.any(self.value))

    @property
    def time_independent(self):
        if self.kind == CLOSED_FORM:
            return not self._uses_time
        if self.kind == TABULATED:
            return len(self.table['axes'][0]) == 1
        return True

    def clamped_rho(self, pts):
        rho = self.domain.rho(pts)
        low = rho < self.rho_clamp
        if np.any(low) and not self._clamp_logged:
            logger.warning("drift: rho clamped at %g for %d of %d points", self.rho_clamp,
                           int(np.sum(low)), len(rho))
            self._clamp_logged = True
        return np.maximum(rho, self.rho_clamp)

    def __call__(self, t, x):
        """ b(t, x) as an (n, dim) array; t is a scalar or one time per point. """
        pts, _ = as_points(x, self.domain.dim)
        n, d = pts.shape
        times = np.broadcast_to(np.asarray(t, dtype=float), (n,))
        if self.kind in (ZERO, CONSTANT):
            out = np.broadcast_to(self.value, (n, d)).copy()
        elif self.kind == CLOSED_FORM:
            env = dict(CONSTANTS)
            env.update(FUNCTIONS)
            env['t'] = times
            env['_rho_x'] = self.clamped_rho(pts)
            env['_norm_x'] = point_norm(pts)
            for k in range(d):
                env['x%d' % (k + 1)] = pts[:, k]
            if d == 1:
                env['x'] = pts[:, 0]
            out = np.empty((n, d))
            for k, code in enumerate(self._codes):
                out[:, k] = eval(code, {'__builtins__': {}}, env)
        else:
            query = np.column_stack([times, pts])
            if self.time_independent:
                query[:, 0] = self.table['axes'][0][0]
            try:
                out = self._interp(query)
            except ValueError as err:
                raise ExtrapolationError("drift table queried outside its grid: %s" % err)
        return self.factor * out

    def norm(self, t, x):
        return point_norm(self(t, x))

    def envelope(self, x, times):
        """ max over the given times of |b(t, x)|. """
        pts, _ = as_points(x, self.domain.dim)
        if self.time_independent:
            return self.norm(times[0], pts)
        return np.max([self.norm(t, pts) for t in times], axis=0)

    def __repr__(self):
        return "DriftField(%s)" % (self.get_save_state(),)


def load_table(path, dim):
    """ Read a CSV grid with columns t, x1..xd, b1..bd into axes and values. """
    with open(path, newline='') as handle:
        rows = [row for row in csv.reader(handle) if row and not row[0].startswith('#')]
    header, body = rows[0], rows[1:]
    expected = ['t'] + ['x%d' % (k + 1) for k in range(dim)] + ['b%d' % (k + 1) for k in range(dim)]
    if [h.strip() for h in header] != expected:
        raise RejectedInput("drift table header must be %s" % ','.join(expected))
    data = np.asarray([[float(v) for v in row] for row in body])
    coords = data[:, :dim + 1]
    axes = [np.unique(coords[:, k]) for k in range(dim + 1)]
    shape = tuple(len(a) for a in axes)
    if data.shape[0] != int(np.prod(shape)):
        raise RejectedInput("drift table is not a full tensor grid")
    order = np.lexsort(coords.T[::-1])
    values = data[order, dim + 1:].reshape(shape + (dim,))
    return {'axes': axes, 'values': values}
