"""Assembly of the beamforming relaxations as canonical cone programs.

Every design variant (matching / max-min criterion, with or without the
dedicated radar covariance, Type-I or Type-II receivers, plus the
radar-only bound) is lowered to one standard form

    minimize    c'x
    subject to  A x + s = b,   s in (zero, nonneg, soc, psd) blocks

where x stacks the real embeddings of the complex Hermitian covariance
blocks in scaled symmetric vectorization, followed by the scalar
variables (alpha / min-gain / epigraph).  A Hermitian H = X + iY is
embedded as [[X, -Y], [Y, X]] of side 2N; trace inner products pick up a
factor 1/2 which is folded into the constraint coefficients.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ._cones import svec, svec_dim, unsvec
from .model import (
    CovarianceSolution,
    DesiredBeampattern,
    PowerMode,
    SensingAngleSet,
    SystemConfig,
    UlaConfig,
    hermitian_part,
    steering_vector,
)

__all__ = [
    "Criterion",
    "Receiver",
    "ProblemSpec",
    "ConicProgram",
    "build",
    "extract",
    "dump_program",
    "load_program",
    "embed_hermitian",
    "unembed_hermitian",
]

SYMPLECTIC_TOL = 1e-3
EIG_CLIP = 1e-9


class Criterion(enum.Enum):
    MATCHING = "matching"
    MAX_MIN = "maxmin"


class Receiver(enum.Enum):
    """Which design variant is being solved.

    TYPE_I / TYPE_II include the dedicated radar covariance; NO_RADAR fixes
    it to zero (Type-II SINR expressions); RADAR_ONLY drops the users
    entirely and serves as the sensing performance upper bound.
    """

    TYPE_I = "type1"
    TYPE_II = "type2"
    NO_RADAR = "noradar"
    RADAR_ONLY = "radaronly"


@dataclass(frozen=True)
class ProblemSpec:
    criterion: Criterion
    receiver: Receiver
    ula: UlaConfig
    system: SystemConfig
    channels: tuple = ()
    desired: DesiredBeampattern | None = None
    sensing: SensingAngleSet | None = None

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        if self.criterion is Criterion.MATCHING and self.desired is None:
            raise ValueError("matching criterion requires a desired beampattern")
        if self.criterion is Criterion.MAX_MIN and self.sensing is None:
            raise ValueError("max-min criterion requires a sensing angle set")
        if not self.channels and self.receiver is not Receiver.RADAR_ONLY:
            raise ValueError("zero users only allowed for the radar-only variant")
        for i, ch in enumerate(self.channels):
            if ch.h.size != self.ula.num_antennas:
                raise ValueError(
                    f"channel {i} has {ch.h.size} entries for a "
                    f"{self.ula.num_antennas}-antenna array")

    @property
    def num_users(self) -> int:
        return 0 if self.receiver is Receiver.RADAR_ONLY else len(self.channels)

    @property
    def has_radar_block(self) -> bool:
        return self.receiver is not Receiver.NO_RADAR


@dataclass(frozen=True)
class ConicProgram:
    """Canonical cone program with variable-block metadata.

    cones is an ordered tuple of (kind, size) blocks; for "psd" size is the
    matrix side length (the block spans side*(side+1)/2 rows), otherwise
    the row count.  var_map locates each covariance block and scalar
    inside the variable vector.
    """

    c: np.ndarray
    a: sp.csr_matrix
    b: np.ndarray
    cones: tuple
    var_map: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float).ravel())
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float).ravel())
        object.__setattr__(self, "a", sp.csr_matrix(self.a))
        if self.a.shape != (self.b.size, self.c.size):
            raise ValueError("inconsistent program dimensions")
        if self.num_rows != self.b.size:
            raise ValueError("cone block dims do not sum to the row count")

    @property
    def num_rows(self) -> int:
        return sum(svec_dim(size) if kind == "psd" else size
                   for kind, size in self.cones)

    @property
    def num_vars(self) -> int:
        return self.c.size


def embed_hermitian(h: np.ndarray) -> np.ndarray:
    """Real embedding [[Re, -Im], [Im, Re]] of a complex Hermitian matrix."""
    x, y = h.real, h.imag
    return np.block([[x, -y], [y, x]])


def unembed_hermitian(s: np.ndarray) -> np.ndarray:
    """Invert the real embedding, averaging the redundant copies."""
    n = s.shape[0] // 2
    x = 0.5 * (s[:n, :n] + s[n:, n:])
    y = 0.5 * (s[n:, :n] - s[:n, n:])
    return hermitian_part(x + 1j * y)


def _coeff(h: np.ndarray) -> np.ndarray:
    """svec coefficients of the real part of a complex trace inner product."""
    return 0.5 * svec(embed_hermitian(hermitian_part(h)))


def build(spec: ProblemSpec) -> ConicProgram:
    """Lower a problem spec to the canonical cone program."""
    n = spec.ula.num_antennas
    side = 2 * n
    d = svec_dim(side)
    k = spec.num_users
    num_blocks = k + (1 if spec.has_radar_block else 0)
    if num_blocks == 0:
        raise ValueError("no covariance blocks: radar-only without radar is empty")

    info_offsets = [j * d for j in range(k)]
    radar_offset = k * d if spec.has_radar_block else None
    nscalar = num_blocks * d
    alpha_idx = t_idx = epi_idx = None
    if spec.criterion is Criterion.MATCHING:
        alpha_idx = nscalar
        epi_idx = nscalar + 1
        nvars = nscalar + 2
    else:
        t_idx = nscalar
        nvars = nscalar + 1

    block_offsets = list(info_offsets) + ([radar_offset] if radar_offset is not None else [])

    rows, cols, vals, bvals = [], [], [], []
    cones: list = []
    row_ptr = 0

    def add_row(col_val_pairs, rhs):
        nonlocal row_ptr
        for cc, vv in col_val_pairs:
            if vv != 0.0:
                rows.append(row_ptr)
                cols.append(cc)
                vals.append(vv)
        bvals.append(rhs)
        row_ptr += 1

    def block_pairs(coeffs_per_block):
        pairs = []
        for off, coeff in coeffs_per_block:
            nz = np.nonzero(coeff)[0]
            pairs.extend((off + j, coeff[j]) for j in nz)
        return pairs

    power_coeff = _coeff(np.eye(n))

    # --- zero cone: power equality row ---
    nzero = 0
    if spec.system.power_mode is PowerMode.EQUALITY:
        add_row(block_pairs([(off, power_coeff) for off in block_offsets]),
                spec.system.total_power)
        nzero = 1
    cones.append(("zero", nzero))

    # --- nonnegative cone: SINR rows, gain rows, power inequality ---
    nn_start = row_ptr
    for i in range(k):
        ch = spec.channels[i]
        if ch.gamma_min <= 0:
            continue  # vacuous constraint
        hh = np.outer(ch.h, ch.h.conj())
        cvec = _coeff(hh)
        per_block = []
        for j in range(k):
            scale = 1.0 / ch.gamma_min if j == i else -1.0
            per_block.append((info_offsets[j], scale * cvec))
        if spec.receiver is Receiver.TYPE_I:
            per_block.append((radar_offset, -cvec))
        # expr >= sigma2  ->  s = expr - sigma2:  A = -expr, b = -sigma2
        add_row([(cc, -vv) for cc, vv in block_pairs(per_block)], -ch.sigma2)
    if spec.criterion is Criterion.MAX_MIN:
        for theta, weight in zip(spec.sensing.angles, spec.sensing.weights):
            a_vec = steering_vector(spec.ula, theta)
            cvec = _coeff(np.outer(a_vec, a_vec.conj()))
            pairs = block_pairs([(off, -cvec) for off in block_offsets])
            pairs.append((t_idx, weight))
            add_row(pairs, 0.0)
    if spec.system.power_mode is PowerMode.INEQUALITY:
        add_row(block_pairs([(off, power_coeff) for off in block_offsets]),
                spec.system.total_power)
    cones.append(("nonneg", row_ptr - nn_start))

    # --- second-order cone: matching epigraph (epi; residuals) ---
    if spec.criterion is Criterion.MATCHING:
        add_row([(epi_idx, -1.0)], 0.0)
        for theta, pdes in zip(spec.desired.grid_angles, spec.desired.values):
            a_vec = steering_vector(spec.ula, theta)
            cvec = _coeff(np.outer(a_vec, a_vec.conj()))
            pairs = block_pairs([(off, cvec) for off in block_offsets])
            pairs.append((alpha_idx, -pdes))
            add_row(pairs, 0.0)
        cones.append(("soc", 1 + spec.desired.num_points))

    # --- PSD cones: covariance block membership ---
    for off in block_offsets:
        for j in range(d):
            add_row([(off + j, -1.0)], 0.0)
        cones.append(("psd", side))

    c = np.zeros(nvars)
    if spec.criterion is Criterion.MATCHING:
        c[epi_idx] = 1.0
    else:
        c[t_idx] = -1.0

    a = sp.csr_matrix((vals, (rows, cols)), shape=(row_ptr, nvars))
    var_map = {
        "info_offsets": tuple(info_offsets),
        "radar_offset": radar_offset,
        "alpha": alpha_idx,
        "t": t_idx,
        "epi": epi_idx,
        "embed_side": side,
        "num_antennas": n,
        "criterion": spec.criterion.value,
    }
    return ConicProgram(c=c, a=a, b=np.array(bvals), cones=tuple(cones), var_map=var_map)


def _extract_block(x: np.ndarray, offset: int, side: int) -> np.ndarray:
    s = unsvec(x[offset:offset + svec_dim(side)], side)
    jmat = np.block([[np.zeros((side // 2, side // 2)), -np.eye(side // 2)],
                     [np.eye(side // 2), np.zeros((side // 2, side // 2))]])
    # The embedded program is invariant under S -> J S J'; numerical optima
    # can drift between the two copies, so project back onto the invariant
    # subspace (the average is optimal whenever S is).
    rot = jmat @ s @ jmat.T
    drift = np.linalg.norm(rot - s)
    if drift > SYMPLECTIC_TOL * (1.0 + np.linalg.norm(s)):
        raise ValueError(
            f"embedded block violates the complex structure: drift {drift:.3e}")
    h = unembed_hermitian(0.5 * (s + rot))
    w, v = np.linalg.eigh(h)
    w[(w < 0) & (w >= -EIG_CLIP)] = 0.0
    return hermitian_part((v * w) @ v.conj().T)


def extract(program: ConicProgram, primal: np.ndarray) -> CovarianceSolution:
    """De-vectorize an optimal primal vector into a covariance solution."""
    vm = program.var_map
    side = vm["embed_side"]
    primal = np.asarray(primal, dtype=float).ravel()
    infos = tuple(_extract_block(primal, off, side) for off in vm["info_offsets"])
    if vm["radar_offset"] is not None:
        radar = _extract_block(primal, vm["radar_offset"], side)
    else:
        radar = np.zeros((side // 2, side // 2), dtype=complex)
    alpha = float(primal[vm["alpha"]]) if vm["alpha"] is not None else None
    if vm["criterion"] == Criterion.MATCHING.value:
        epi = float(primal[vm["epi"]])
        objective = epi ** 2
        min_gain = None
    else:
        min_gain = float(primal[vm["t"]])
        objective = min_gain
    return CovarianceSolution(info_covariances=infos, radar_covariance=radar,
                              alpha=alpha, min_gain=min_gain, objective=objective)


def dump_program(program: ConicProgram, path) -> None:
    """Write the program in a plain-text sparse format for external checks.

    Header: dimensions and the cone list; body: COO triplets of A followed
    by dense c and b.
    """
    coo = program.a.tocoo()
    with open(path, "w") as fh:
        fh.write(f"conicprogram {program.num_vars} {program.b.size} {coo.nnz}\n")
        fh.write(" ".join(f"{kind}:{size}" for kind, size in program.cones) + "\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {float(v)!r}\n")
        fh.write(" ".join(repr(float(v)) for v in program.c) + "\n")
        fh.write(" ".join(repr(float(v)) for v in program.b) + "\n")


def load_program(path) -> ConicProgram:
    with open(path) as fh:
        tag, nvars, nrows, nnz = fh.readline().split()
        if tag != "conicprogram":
            raise ValueError("not a conic program dump")
        nvars, nrows, nnz = int(nvars), int(nrows), int(nnz)
        cones = []
        for tok in fh.readline().split():
            kind, size = tok.split(":")
            cones.append((kind, int(size)))
        rows, cols, vals = [], [], []
        for _ in range(nnz):
            i, j, v = fh.readline().split()
            rows.append(int(i))
            cols.append(int(j))
            vals.append(float(v))
        c = np.array([float(t) for t in fh.readline().split()])
        b = np.array([float(t) for t in fh.readline().split()])
    a = sp.csr_matrix((vals, (rows, cols)), shape=(nrows, nvars))
    return ConicProgram(c=c, a=a, b=b, cones=tuple(cones))
