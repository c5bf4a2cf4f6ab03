"""Independent reference computations shared by the tests.

Region quantities are computed straight from densities (scipy.stats pdfs and
quadrature) or from atom lists, never through the package's CDF helpers.
"""

from scipy import integrate, stats

from onebit.distributions import Gaussian, HardInstance, PointMass, ScaledStudentT, TwoPoint, Uniform


def atoms(spec):
    if isinstance(spec, PointMass):
        return [(spec.x, 1.0)]
    if isinstance(spec, HardInstance):
        c = spec.center
        p_up = 0.5 + spec.sign * spec.eps / spec.sigma
        return [(c - 0.5, 1 - p_up), (c + 0.5, p_up)]
    if isinstance(spec, TwoPoint):
        return [(spec.x1, spec.p1), (spec.x2, 1 - spec.p1)]
    return None


def density(spec):
    if isinstance(spec, Uniform):
        return stats.uniform(spec.a, spec.b - spec.a).pdf
    if isinstance(spec, Gaussian):
        return stats.norm(spec.mu, spec.sd).pdf
    if isinstance(spec, ScaledStudentT):
        return stats.t(spec.dof, loc=spec.mu, scale=spec.scale).pdf
    return None


def _inside(x, a, b, lc, rc):
    return (x >= a if lc else x > a) and (x <= b if rc else x < b)


def oracle_region(spec, a, b, lc, rc):
    """E[(b-X)/(b-a) 1{X in R}], E[(X-a)/(b-a) 1{X in R}], E[X 1{X in R}] from pdf or atoms."""
    pts = atoms(spec)
    if pts is not None:
        pa = sum(p * (b - x) / (b - a) for x, p in pts if _inside(x, a, b, lc, rc))
        pb = sum(p * (x - a) / (b - a) for x, p in pts if _inside(x, a, b, lc, rc))
        mu = sum(p * x for x, p in pts if _inside(x, a, b, lc, rc))
        return pa, pb, mu
    f = density(spec)
    q = lambda g: integrate.quad(lambda x: g(x) * f(x), a, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    return q(lambda x: (b - x) / (b - a)), q(lambda x: (x - a) / (b - a)), q(lambda x: x)
