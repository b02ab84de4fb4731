"""Field synthesis: exact Gaussian sampling, Hermitian spectral synthesis,
and moving-average Riemann sums driven by Gaussian or SaS noise.

Randomness comes from counter-based Philox streams keyed by
(seed, stream_id), so draws are reproducible and order-independent:
stream 0 feeds measure/noise arrays for draw 0, stream j for draw j.

Realizations persist in a small binary container: magic ``TRF1``, a
little-endian uint32 header length, a UTF-8 JSON header, then the
float64 little-endian payload (row-major, sites x n).
"""

import json
import math
import struct

import numpy as np

from . import _fast
from .covariance import CovarianceError, IsotropicGaussianSpec
from .kernels import FieldSpec, KernelError, existence_check

__all__ = [
    "SimulationError", "GridSpec", "Realization", "philox_stream",
    "sas_sample", "gaussian_exact", "gaussian_exact_many",
    "spectral_synthesis", "ma_synthesis", "tfsm_synthesis",
    "sas_truncation_report", "truncation_margin", "tempering_radius",
    "symmetric_freq_grid", "spectral_tail_cutoff",
]

EXACT_SITE_CAP = 16384
_MAGIC = b"TRF1"


class SimulationError(RuntimeError):
    pass


class GridSpec:
    """Regular product grid: per-axis [lo, hi] ranges and point counts."""

    def __init__(self, ranges, counts):
        self.ranges = [(float(lo), float(hi)) for lo, hi in ranges]
        self.counts = [int(c) for c in counts]
        if len(self.ranges) != len(self.counts):
            raise SimulationError("ranges and counts length mismatch")
        if any(c < 2 for c in self.counts):
            raise SimulationError("point counts must be >= 2")
        if any(hi <= lo for lo, hi in self.ranges):
            raise SimulationError("empty grid range")

    @property
    def d(self):
        return len(self.ranges)

    @property
    def n_sites(self):
        return int(np.prod(self.counts))

    @property
    def spacings(self):
        return [(hi - lo) / (c - 1) for (lo, hi), c in
                zip(self.ranges, self.counts)]

    @property
    def cell_volume(self):
        return float(np.prod(self.spacings))

    def axes(self):
        return [np.linspace(lo, hi, c) for (lo, hi), c in
                zip(self.ranges, self.counts)]

    def sites(self):
        """(N, d) site coordinates, row-major (last axis fastest)."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def midpoints(self):
        """(M, d) cell midpoints (offset grid used for Riemann sums)."""
        axes = [lo + (np.arange(c - 1) + 0.5) * (hi - lo) / (c - 1)
                for (lo, hi), c in zip(self.ranges, self.counts)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def to_json(self):
        return {"ranges": [list(r) for r in self.ranges],
                "counts": self.counts}

    @classmethod
    def from_json(cls, doc):
        return cls(doc["ranges"], doc["counts"])


class Realization:
    """A sampled vector field on a grid with reproducibility provenance."""

    def __init__(self, grid, values, provenance):
        self.grid = grid
        self.values = np.asarray(values, dtype=np.float64)
        if self.values.ndim == 1:
            self.values = self.values[:, None]
        if not np.all(np.isfinite(self.values)):
            raise SimulationError("realization contains non-finite values")
        self.provenance = dict(provenance)

    @property
    def n(self):
        return self.values.shape[1]

    def save(self, path):
        header = {
            "format": 1,
            "grid": self.grid.to_json(),
            "n": self.n,
            "dtype": "<f8",
            "shape": list(self.values.shape),
            "provenance": self.provenance,
        }
        blob = json.dumps(header, sort_keys=True).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
            fh.write(self.values.astype("<f8").tobytes(order="C"))

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != _MAGIC:
                raise SimulationError(f"bad magic {magic!r} in {path}")
            (hlen,) = struct.unpack("<I", fh.read(4))
            header = json.loads(fh.read(hlen).decode("utf-8"))
            payload = fh.read()
        shape = tuple(header["shape"])
        values = np.frombuffer(payload, dtype="<f8").reshape(shape).copy()
        return cls(GridSpec.from_json(header["grid"]), values,
                   header["provenance"])

    def to_csv(self, path):
        sites = self.grid.sites()
        cols = np.hstack([sites, self.values])
        head = ",".join([f"x{i}" for i in range(sites.shape[1])]
                        + [f"v{i}" for i in range(self.n)])
        np.savetxt(path, cols, delimiter=",", header=head, comments="")


def philox_stream(seed, stream_id):
    """Philox4x64 generator keyed by (seed, stream)."""
    bg = np.random.Philox(key=np.array([seed, stream_id], dtype=np.uint64))
    return np.random.Generator(bg)


def sas_sample(alpha, scale, seed, count, stream_id=0):
    """Symmetric alpha-stable variates by the Chambers-Mallows-Stuck
    transform; chf exp(-|scale u|^alpha) (alpha = 2 gives N(0, 2 scale^2))."""
    if not 0 < alpha <= 2:
        raise SimulationError("alpha must lie in (0, 2]")
    if scale <= 0:
        raise SimulationError("scale must be positive")
    gen = philox_stream(seed, stream_id)
    theta = (gen.random(count) - 0.5) * math.pi
    w = gen.standard_exponential(count)
    return scale * _fast.cms_batch(theta, w, alpha)


# ---------------------------------------------------------------------------

def _factor_gram(gram, n_sites_total):
    """Cholesky factor with escalating diagonal jitter (cap 1e-8 tr/N)."""
    trace = float(np.trace(gram))
    cap = 1e-8 * trace / max(n_sites_total, 1)
    zero_rows = np.diag(gram) == 0.0
    for jitter in (0.0, 1e-14, 1e-12, 1e-10):
        bump = jitter * trace / max(n_sites_total, 1)
        if bump > cap and jitter > 0:
            break
        try:
            chol = np.linalg.cholesky(gram + bump * np.eye(gram.shape[0]))
            chol[zero_rows, :] = 0.0     # degenerate sites stay exactly 0
            return chol
        except np.linalg.LinAlgError:
            continue
    raise SimulationError("gram factorization failed at maximal jitter")


def gaussian_exact_many(cov_model, grid, seed, n_draws):
    """Exact Gaussian draws from the covariance model on a grid."""
    n = cov_model.spec.n
    if grid.n_sites * n > EXACT_SITE_CAP:
        raise SimulationError(
            f"{grid.n_sites} sites exceeds exact-synthesis cap "
            f"{EXACT_SITE_CAP}")
    sites = grid.sites()
    gram = cov_model.gram(sites, check_psd=False)
    chol = _factor_gram(gram, grid.n_sites)
    out = []
    meta = {"method": "gaussian_exact", "seed": int(seed),
            "spec": cov_model.spec.to_json(), "grid": grid.to_json()}
    for j in range(n_draws):
        z = philox_stream(seed, j).standard_normal(gram.shape[0])
        vals = (chol @ z).reshape(grid.n_sites, n)
        out.append(Realization(grid, vals, {**meta, "draw": j}))
    return out


def gaussian_exact(cov_model, grid, seed):
    return gaussian_exact_many(cov_model, grid, seed, 1)[0]


# ---------------------------------------------------------------------------

def symmetric_freq_grid(xi_max, count_per_axis, d):
    """Half-space midpoint frequency grid; with its mirror it is a
    symmetric grid excluding 0.

    Returns (xi_half, cell_volume): full sums run over xi_half and
    -xi_half.
    """
    if xi_max <= 0 or count_per_axis < 2:
        raise SimulationError("bad frequency grid parameters")
    step = xi_max / count_per_axis
    half_axis = (np.arange(count_per_axis) + 0.5) * step
    if d == 1:
        return half_axis[:, None], step
    full_axis = np.concatenate([-half_axis[::-1], half_axis])
    mesh = np.meshgrid(*([full_axis] * (d - 1) + [half_axis]), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    return pts, step ** d


def spectral_tail_cutoff(p_decay, lam, d, tail_mass=1e-4):
    """Frequency cutoff so the analytic power-law tail bound of the
    variance integrand stays below ``tail_mass`` of the total."""
    if 2 * p_decay <= d:
        raise SimulationError("spectral density tail is not integrable")
    return max(1.0, lam) * tail_mass ** (-1.0 / (2.0 * p_decay - d))


def _check_symmetric(xi):
    """Validate a user-supplied full grid: must pair xi with -xi."""
    xi_set = {tuple(np.round(row, 12)) for row in xi}
    for row in xi:
        if tuple(np.round(-row, 12)) not in xi_set:
            raise SimulationError("asymmetric frequency grid")


def spectral_synthesis(spec, grid, seed, n_draws=1, freq=None,
                       count_per_axis=512, imag_tol=1e-10):
    """Hermitian-symmetric Riemann-sum synthesis of a harmonizable field.

    ``spec`` is an IsotropicGaussianSpec or a Gaussian FieldSpec of
    flavor H.  ``freq`` overrides the (half-grid, cell_volume) pair;
    by default a dyadic cutoff from the density's power-law tail is used.
    """
    density, n, p_decay, lam = _spectral_density_for(spec)
    d = grid.d
    if freq is None:
        xi_max = spectral_tail_cutoff(p_decay, lam, d)
        xi_half, dvol = symmetric_freq_grid(xi_max, count_per_axis, d)
    else:
        xi_half, dvol = freq
        xi_half = np.atleast_2d(np.asarray(xi_half, dtype=float))
    amp = density(xi_half)                      # (M, n, n)
    sites = grid.sites()
    phase = np.exp(-1j * sites @ xi_half.T) - 1.0      # (N, M)
    sqdv = math.sqrt(dvol)
    out = []
    meta = {"method": "spectral_synthesis", "seed": int(seed),
            "spec": spec.to_json(), "grid": grid.to_json(),
            "freq_points": int(xi_half.shape[0]), "cell_volume": dvol}
    for j in range(n_draws):
        gen = philox_stream(seed, j)
        g = gen.standard_normal((xi_half.shape[0], n, 2))
        z = (g[..., 0] + 1j * g[..., 1]) / math.sqrt(2.0)   # (M, n)
        coef = np.einsum("mij,mj->mi", amp, z) * sqdv       # (M, n)
        total = phase @ coef + np.conj(phase) @ np.conj(coef)
        resid = float(np.max(np.abs(total.imag)))
        scale = max(float(np.max(np.abs(total.real))), 1e-300)
        if resid > imag_tol * scale:
            raise SimulationError(
                f"Hermitian symmetry violated: imag residue {resid:.2e}")
        out.append(Realization(grid, total.real, {**meta, "draw": j}))
    return out if n_draws > 1 else out[0]


def _spectral_density_for(spec):
    from .covariance import (ibtofbf_spectral_density,
                             itofbf_spectral_density)
    if isinstance(spec, IsotropicGaussianSpec):
        fn = itofbf_spectral_density if spec.variant == "ITOFBF" \
            else ibtofbf_spectral_density
        p_decay = spec.d / 2.0 + float(np.min(spec.h)) \
            if spec.variant == "ITOFBF" else 2.0 * float(np.min(spec.h))
        lam = spec.lambda_ if spec.variant == "ITOFBF" else spec.lambda_ ** 2

        def density(xi_arr):
            return np.stack([fn(spec, row) for row in xi_arr])

        return density, spec.n, p_decay, max(lam, 1e-6)
    if isinstance(spec, FieldSpec):
        if spec.flavor != "H":
            raise SimulationError("spectral synthesis needs flavor H")
        if spec.measure.variant != "gaussian":
            raise SimulationError(
                "harmonizable synthesis is implemented for the Gaussian "
                "measure only")

        def density(xi_arr):
            base = spec.lambda_ + spec.phi.batch(xi_arr)
            ph = spec.power_h.batch(1.0 / base)
            pq = spec.power_qb.batch(1.0 / base)
            return np.einsum("mij,mjk->mik", ph, pq)

        p_decay = spec.h_matrix.varpi + spec.q * spec.measure.varpi_b
        return density, spec.n, p_decay, max(spec.lambda_, 1e-6)
    raise SimulationError(f"unsupported spec type {type(spec)!r}")


# ---------------------------------------------------------------------------

def _measure_increments(measure, dvol, gen, m_nodes):
    """Noise increments per cell: Gaussian N(0, dvol) or per-coordinate
    SaS with scale dvol^{1/alpha_i}, all through the same CMS stream."""
    theta = (gen.random((m_nodes, measure.n)) - 0.5) * math.pi
    w = gen.standard_exponential((m_nodes, measure.n))
    out = np.empty((m_nodes, measure.n))
    if measure.variant == "gaussian":
        for i in range(measure.n):
            out[:, i] = _fast.cms_batch(theta[:, i], w[:, i], 2.0) \
                * math.sqrt(dvol) / math.sqrt(2.0)
    else:
        for i, alpha in enumerate(measure.alphas):
            out[:, i] = _fast.cms_batch(theta[:, i], w[:, i], alpha) \
                * dvol ** (1.0 / alpha)
    return out


def tempering_radius(spec):
    """Effective support radius of the tempered kernel: the exponential
    factor is below 1e-10 at phi-distance R (Bessel flavor decays at half
    the exponential rate; eta* = 0.5)."""
    m_phi = spec.phi.extrema()[0]
    if spec.lambda_ <= 0 or m_phi <= 0:
        raise SimulationError("tempering radius needs lambda > 0, m_phi > 0")
    base = 2.0 * math.log(1e10) / (spec.lambda_ * m_phi)
    return base if spec.flavor == "MA" else base / 0.5


def truncation_margin(spec, grid, integration_grid):
    """min over sites/axes of (covered distance) / (tempering radius)."""
    r_eff = tempering_radius(spec)
    sites = grid.sites()
    lo = np.array([r[0] for r in integration_grid.ranges])
    hi = np.array([r[1] for r in integration_grid.ranges])
    cover = np.minimum(sites.min(axis=0) - lo, hi - sites.max(axis=0))
    return float(np.min(cover) / r_eff)


def _ma_kernel_matrix(spec, sites, nodes):
    """Scalar-field kernel values over sites x integration nodes."""
    if spec.n != 1:
        raise SimulationError("Riemann-sum synthesis implemented for n = 1")
    nu = float(spec.exponent.entries[0, 0])
    euclid_like = (spec.d == 1 and spec.phi.variant == "euclidean")
    if spec.flavor == "MA" and euclid_like:
        return _fast.ma_matrix_1d(sites[:, 0], nodes[:, 0], nu, spec.lambda_)
    # generic path through phi
    diffs = sites[:, None, :] - nodes[None, :, :]
    phi_xy = spec.phi.batch(diffs.reshape(-1, spec.d)).reshape(
        sites.shape[0], nodes.shape[0])
    phi_y = spec.phi.batch(-nodes)
    if spec.flavor == "MA":
        def term(ph):
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(ph > 0,
                                np.exp(-spec.lambda_ * ph)
                                * np.where(ph > 0, ph, 1.0) ** nu, 0.0)
    else:
        from .specfun import bessel_k_batch

        def term(ph):
            ph = np.asarray(ph)
            out = np.zeros_like(ph)
            pos = ph > 0
            out[pos] = bessel_k_batch(nu, spec.lambda_ * ph[pos]) \
                * ph[pos] ** nu
            if np.any(~pos):
                from .kernels import _bessel_power_term
                out[~pos] = _bessel_power_term(spec, 0.0)[0, 0]
            return out
    return term(phi_xy) - term(phi_y)[None, :]


def sas_truncation_report(spec, grid, integration_grid):
    """Estimated L^alpha mass neglected outside the integration grid.

    The inside mass is the Riemann sum of |kernel|^alpha at a central
    site; the outside part is a crude exponential-envelope upper bound
    integrated beyond the covered phi-distance.
    """
    alpha = min(spec.measure.alphas) if spec.measure.alphas else 2.0
    lam, m_phi = spec.lambda_, spec.phi.extrema()[0]
    sites = grid.sites()
    center = sites[sites.shape[0] // 2][None, :]
    nodes = integration_grid.midpoints()
    g = _ma_kernel_matrix(spec, center, nodes)
    inside = float(np.sum(np.abs(g) ** alpha)) * integration_grid.cell_volume
    lo = np.array([r[0] for r in integration_grid.ranges])
    hi = np.array([r[1] for r in integration_grid.ranges])
    covered = float(np.min(np.minimum(center[0] - lo, hi - center[0])))
    nu_abs = abs(float(spec.exponent.entries[0, 0]))
    rate = alpha * lam * m_phi
    expo = -rate * covered + alpha * nu_abs * math.log(max(covered, 1.0)) \
        + (spec.d - 1) * math.log(max(covered, 1.0))
    bound_out = 2.0 * spec.d * math.exp(max(expo, -745.0)) / rate
    fraction = bound_out / max(inside + bound_out, 1e-300)
    return {"alpha": alpha, "inside_mass": inside,
            "outside_bound": bound_out, "fraction": fraction}


def ma_synthesis(spec, grid, integration_grid, seed, n_draws=1,
                 require_coverage=True):
    """Riemann-sum synthesis of a moving-average field (n = 1).

    Increments are i.i.d. per midpoint cell: Gaussian with variance
    dvol or per-coordinate SaS with scale dvol^{1/alpha}; the Gaussian
    route reuses the alpha = 2 CMS transform (scaled by 1/sqrt(2)), so
    with the same seed the sas(alpha=2) output is exactly sqrt(2) times
    the gaussian output.
    """
    report = existence_check(spec)
    if not report.ok:
        raise SimulationError(f"existence check failed: {report.margins}")
    if spec.flavor not in ("MA", "MA_B"):
        raise SimulationError("ma_synthesis needs flavor MA or MA_B")
    margin = truncation_margin(spec, grid, integration_grid)
    if require_coverage and margin < 1.0:
        raise SimulationError(
            f"integration grid covers only {margin:.2f} of the tempering "
            "radius; enlarge it or pass require_coverage=False")
    sites = grid.sites()
    nodes = integration_grid.midpoints()
    dvol = integration_grid.cell_volume
    g = _ma_kernel_matrix(spec, sites, nodes)
    out = []
    meta = {"method": "ma_synthesis", "seed": int(seed),
            "spec": spec.to_json(), "grid": grid.to_json(),
            "integration_grid": integration_grid.to_json(),
            "truncation_margin": margin}
    for j in range(n_draws):
        gen = philox_stream(seed, j)
        dm = _measure_increments(spec.measure, dvol, gen, nodes.shape[0])
        vals = g @ dm[:, 0]
        out.append(Realization(grid, vals[:, None], {**meta, "draw": j}))
    return out if n_draws > 1 else out[0]


def tfsm_synthesis(hurst, alpha, lam, times, integration_grid, seed,
                   n_draws=1, chunk=2048):
    """One-sided tempered stable motion on the line by Riemann sums.

    Returns an (n_draws, n_times) array; ``times`` are the observation
    points, ``integration_grid`` a 1-d GridSpec covering the kernel
    support (y <= max(times), down to the tempering radius).
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    nodes = integration_grid.midpoints()[:, 0]
    dy = integration_grid.cell_volume
    expo = hurst - 1.0 / alpha
    g = _fast.tfsm_matrix(times, nodes, expo, lam)       # (T, M)
    m = nodes.shape[0]
    out = np.empty((n_draws, times.shape[0]))
    scale = dy ** (1.0 / alpha)
    done = 0
    block = 0
    while done < n_draws:
        take = min(chunk, n_draws - done)
        gen = philox_stream(seed, block)
        theta = (gen.random((take, m)) - 0.5) * math.pi
        w = gen.standard_exponential((take, m))
        for i in range(take):
            dm = scale * _fast.cms_batch(theta[i], w[i], alpha)
            out[done + i] = g @ dm
        done += take
        block += 1
    return out
