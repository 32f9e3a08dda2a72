"""Construction-A nested lattice codes: generation, quantization, dithering.

A code is the lift of a random (n, k) linear code over Z_p to an integer
lattice, scaled by gamma.  The shaping lattice is the self-similar sublattice
tau * Lambda_C; coset leaders of the partition form the codebook, of size
tau^n.  Quantization is exact closest-vector search (shared sphere-search
kernel) with lexicographic tie-breaking for reproducibility.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NumericalError
from .sphere import closest_point_lex

_REDRAW_LIMIT = 1000


# ============================================================================
#  Code container
# ============================================================================


@dataclass(frozen=True)
class NestedLatticeCode:
    """Coding lattice {scale * basis_int @ z : z integer} plus self-similar
    shaping sublattice scaled by the integer ``nesting_ratio``."""

    dim: int
    prime: int
    code_dim: int
    scale: float
    basis_int: np.ndarray        # (dim, dim) int64 columns, det = prime**(dim-code_dim)
    code_rows: np.ndarray        # (code_dim, dim) systematic generator over Z_p
    nesting_ratio: int | None = None
    rate: float | None = None

    @property
    def basis(self) -> np.ndarray:
        """Real generator matrix of the coding lattice (columns)."""
        return self.scale * self.basis_int.astype(float)

    @property
    def shaping_basis(self) -> np.ndarray:
        self._require_nesting()
        return self.nesting_ratio * self.basis

    @property
    def codebook_size(self) -> int:
        self._require_nesting()
        return self.nesting_ratio ** self.dim

    @property
    def fundamental_volume(self) -> float:
        return self.scale ** self.dim * float(self.prime) ** (self.dim - self.code_dim)

    def _require_nesting(self) -> None:
        if self.nesting_ratio is None:
            raise ConfigurationError("code has no shaping lattice: nesting ratio unset")

    def with_nesting(self, nesting_ratio: int, rate: float | None = None) -> "NestedLatticeCode":
        if nesting_ratio < 1 or int(nesting_ratio) != nesting_ratio:
            raise ConfigurationError("nesting ratio must be a positive integer")
        return dataclasses.replace(self, nesting_ratio=int(nesting_ratio), rate=rate)

    def with_scale(self, scale: float) -> "NestedLatticeCode":
        if not (scale > 0 and np.isfinite(scale)):
            raise ConfigurationError("scale must be positive and finite")
        return dataclasses.replace(self, scale=float(scale))


@dataclass(frozen=True)
class LatticePoint:
    """A coding-lattice point together with its integer coordinates."""

    coords: np.ndarray
    coeffs: np.ndarray   # coords == code.basis @ coeffs exactly by construction


# ============================================================================
#  Construction A
# ============================================================================


def _systematize(rows: np.ndarray, p: int) -> np.ndarray | None:
    """Reduce a k x n generator over Z_p to [I_k | M] without column swaps.
    Returns None if the leading k x k block is singular mod p."""
    a = np.array(rows, dtype=np.int64) % p
    k, n = a.shape
    for col in range(k):
        piv = None
        for r in range(col, k):
            if a[r, col] % p != 0:
                piv = r
                break
        if piv is None:
            return None
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
        inv = pow(int(a[col, col]), p - 2, p)   # Fermat inverse, p prime
        a[col] = (a[col] * inv) % p
        for r in range(k):
            if r != col and a[r, col] % p != 0:
                a[r] = (a[r] - a[r, col] * a[col]) % p
    return a


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


def _basis_from_systematic(sys_rows: np.ndarray, p: int) -> np.ndarray:
    k, n = sys_rows.shape
    b = np.zeros((n, n), dtype=np.int64)
    b[:k, :k] = np.eye(k, dtype=np.int64)
    b[k:, :k] = sys_rows[:, k:].T
    b[k:, k:] = p * np.eye(n - k, dtype=np.int64)
    if k == n:
        b = np.eye(n, dtype=np.int64)
    return _lll_reduce(b)


def _lll_reduce(basis: np.ndarray, delta: float = 0.75) -> np.ndarray:
    """Lenstra-Lenstra-Lovasz reduction of an integer column basis.  The
    raw triangular lift mixes unit-length code directions with p-length
    modulus directions, which makes exact closest-point enumeration blow
    up; the reduced basis generates the same lattice with near-orthogonal
    columns."""
    b = basis.astype(np.int64).copy()
    n = b.shape[1]

    def gram_schmidt():
        bf = b.astype(float)
        q = np.zeros_like(bf)
        mu = np.zeros((n, n))
        norms = np.zeros(n)
        for i in range(n):
            v = bf[:, i].copy()
            for j in range(i):
                mu[i, j] = (bf[:, i] @ q[:, j]) / norms[j]
                v -= mu[i, j] * q[:, j]
            q[:, i] = v
            norms[i] = v @ v
        return mu, norms

    k = 1
    while k < n:
        mu, norms = gram_schmidt()
        for j in range(k - 1, -1, -1):
            r = int(np.rint(mu[k, j]))
            if r != 0:
                b[:, k] -= r * b[:, j]
                mu, norms = gram_schmidt()
        if norms[k] >= (delta - mu[k, k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            b[:, [k - 1, k]] = b[:, [k, k - 1]]
            k = max(k - 1, 1)
    return b


def from_code_rows(rows: np.ndarray, prime: int, scale: float) -> NestedLatticeCode:
    """Build the Construction-A code from an explicit generator over Z_p."""
    if not _is_prime(prime):
        raise ConfigurationError(f"{prime} is not prime")
    rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
    sys_rows = _systematize(rows, prime)
    if sys_rows is None:
        raise ConfigurationError("generator has singular leading block mod p")
    k, n = sys_rows.shape
    return NestedLatticeCode(
        dim=n, prime=prime, code_dim=k, scale=float(scale),
        basis_int=_basis_from_systematic(sys_rows, prime),
        code_rows=sys_rows,
    )


def construction_a(n: int, p: int, k: int, gamma: float,
                   rng: np.random.Generator) -> NestedLatticeCode:
    """Draw a random full-rank (n, k) linear code over Z_p and lift it to a
    gamma-scaled integer lattice with |det| = gamma^n * p^(n-k)."""
    if not _is_prime(p):
        raise ConfigurationError(f"{p} is not prime")
    if not 1 <= k <= n:
        raise ConfigurationError(f"need 1 <= k <= n, got k={k}, n={n}")
    for _ in range(_REDRAW_LIMIT):
        rows = rng.integers(0, p, size=(k, n))
        sys_rows = _systematize(rows, p)
        if sys_rows is not None:
            return NestedLatticeCode(
                dim=n, prime=p, code_dim=k, scale=float(gamma),
                basis_int=_basis_from_systematic(sys_rows, p),
                code_rows=sys_rows,
            )
    raise NumericalError("could not draw a systematizable generator")


def contains_int(code: NestedLatticeCode, z: np.ndarray) -> bool:
    """Membership of an integer vector in the *unscaled* lifted lattice:
    z mod p must be a codeword.  Exact integer arithmetic."""
    z = np.asarray(z, dtype=np.int64)
    k, p = code.code_dim, code.prime
    if k == code.dim:
        return True
    m = code.code_rows[:, k:]
    tail = (m.T @ (z[:k] % p)) % p
    return bool(np.all((z[k:] - tail) % p == 0))


# ============================================================================
#  Quantization and modulo arithmetic
# ============================================================================


def quantize(code: NestedLatticeCode, y: np.ndarray,
             lattice: str = "coding") -> LatticePoint:
    """Nearest lattice point in Euclidean norm; equidistant candidates go to
    the lexicographically smallest integer coordinate vector."""
    y = np.asarray(y, dtype=float).ravel()
    if lattice == "coding":
        basis = code.basis
        z = closest_point_lex(basis, y)
        return LatticePoint(coords=basis @ z, coeffs=z)
    if lattice == "shaping":
        basis = code.shaping_basis
        z = closest_point_lex(basis, y)
        return LatticePoint(coords=basis @ z, coeffs=code.nesting_ratio * z)
    raise ValueError(f"unknown lattice {lattice!r}")


def mod_lattice(code: NestedLatticeCode, y: np.ndarray,
                lattice: str = "shaping") -> np.ndarray:
    """y minus its nearest lattice point; lands in the Voronoi region."""
    y = np.asarray(y, dtype=float).ravel()
    return y - quantize(code, y, lattice=lattice).coords


# ============================================================================
#  Dithers and power normalization
# ============================================================================


def sample_dither(code: NestedLatticeCode, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample over the Voronoi region of the shaping lattice:
    uniform over the fundamental parallelepiped, folded by mod-Lambda_S."""
    u0 = code.shaping_basis @ rng.random(code.dim)
    return mod_lattice(code, u0, lattice="shaping")


def second_moment(code: NestedLatticeCode, rng: np.random.Generator,
                  samples: int = 10_000) -> float:
    """Monte-Carlo per-dimension second moment of the shaping Voronoi region."""
    total = 0.0
    for _ in range(samples):
        u = sample_dither(code, rng)
        total += float(u @ u)
    return total / (samples * code.dim)


def normalize_power(code: NestedLatticeCode, rng: np.random.Generator,
                    samples: int = 100_000, target: float = 0.5) -> NestedLatticeCode:
    """Rescale gamma so the shaping lattice's per-dimension second moment hits
    ``target`` (1/2 meets the unit average-power constraint per antenna)."""
    m2 = second_moment(code, rng, samples)
    if not np.isfinite(m2) or m2 <= 0:
        raise NumericalError(f"second-moment estimate {m2} not usable")
    return code.with_scale(code.scale * np.sqrt(target / m2))


# ============================================================================
#  Messages and coset leaders
# ============================================================================


def index_to_coset_leader(code: NestedLatticeCode, z_msg: np.ndarray) -> np.ndarray:
    """Coset leader (G @ z_msg) mod Lambda_S for a message index vector with
    entries in [0, nesting_ratio)."""
    code._require_nesting()
    z_msg = np.asarray(z_msg, dtype=np.int64).ravel()
    if z_msg.shape[0] != code.dim:
        raise ConfigurationError(f"index length {z_msg.shape[0]} != dim {code.dim}")
    if np.any(z_msg < 0) or np.any(z_msg >= code.nesting_ratio):
        raise ConfigurationError("message indices out of [0, nesting_ratio)")
    return mod_lattice(code, code.basis @ z_msg, lattice="shaping")


# ============================================================================
#  Text serialization (experiment manifests)
# ============================================================================


def code_to_text(code: NestedLatticeCode) -> str:
    lines = [
        f"dim {code.dim}",
        f"prime {code.prime}",
        f"code_dim {code.code_dim}",
        f"scale {code.scale!r}",
        f"nesting_ratio {code.nesting_ratio if code.nesting_ratio is not None else 'none'}",
        f"rate {code.rate!r}" if code.rate is not None else "rate none",
    ]
    for row in code.code_rows:
        lines.append("code_row " + " ".join(str(int(v)) for v in row))
    for row in code.basis_int:
        lines.append("basis_row " + " ".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def code_from_text(text: str) -> NestedLatticeCode:
    fields: dict[str, str] = {}
    code_rows, basis_rows = [], []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        key, _, value = line.partition(" ")
        if key == "code_row":
            code_rows.append([int(v) for v in value.split()])
        elif key == "basis_row":
            basis_rows.append([int(v) for v in value.split()])
        else:
            fields[key] = value
    ratio = None if fields["nesting_ratio"] == "none" else int(fields["nesting_ratio"])
    rate = None if fields["rate"] == "none" else float(fields["rate"])
    return NestedLatticeCode(
        dim=int(fields["dim"]), prime=int(fields["prime"]),
        code_dim=int(fields["code_dim"]), scale=float(fields["scale"]),
        basis_int=np.array(basis_rows, dtype=np.int64),
        code_rows=np.array(code_rows, dtype=np.int64),
        nesting_ratio=ratio, rate=rate,
    )
