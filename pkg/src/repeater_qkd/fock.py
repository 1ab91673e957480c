"""Truncated multimode Fock space: labeled modes, sparse real operators.

Operators are sparse maps from (ket, bra) occupation pairs to real
coefficients; absent pairs are zero.  The whole setup in scope is symmetric
and phase stabilized, so coefficients stay real and Hermiticity reduces to
entry(k, b) == entry(b, k).  Operators are immutable after construction and
every operation returns a new one, so values can be shared freely across
threads.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping

from .errors import ModeError

# An accumulated coefficient smaller than this fraction of the summed
# |contributions| is catastrophic-cancellation residue and is dropped.
PRUNE_REL = 1e-15

DEFAULT_N_MAX = 4

Occupation = tuple[int, ...]
EntryKey = tuple[Occupation, Occupation]


def accumulate(acc: dict, key, value: float) -> None:
    """Add ``value`` into ``acc[key]`` while tracking the absolute mass."""
    slot = acc.get(key)
    if slot is None:
        acc[key] = [value, abs(value)]
    else:
        slot[0] += value
        slot[1] += abs(value)


def finalize(acc: dict) -> dict:
    """Turn an accumulator into an entry dict, pruning cancellation dust."""
    out = {}
    for key, (value, mass) in acc.items():
        if value != 0.0 and abs(value) > PRUNE_REL * mass:
            out[key] = value
    return out


class SparseOperator:
    """Sparse real operator over a labeled, truncated multimode Fock basis.

    Parameters
    ----------
    modes : iterable of str
        Ordered mode labels, unique within the operator.
    entries : mapping
        ``(ket, bra) -> coefficient`` with occupation tuples of the same
        length as ``modes``.  Exact zeros are dropped.
    n_max : int
        Per-mode occupation truncation.
    """

    __slots__ = ("modes", "n_max", "entries", "_index")

    def __init__(self, modes: Iterable[str], entries: Mapping, n_max: int = DEFAULT_N_MAX):
        modes = tuple(modes)
        if len(set(modes)) != len(modes):
            raise ModeError(f"duplicate mode labels in {modes!r}")
        n_modes = len(modes)
        clean: dict[EntryKey, float] = {}
        for (ket, bra), value in entries.items():
            value = float(value)
            if value == 0.0:
                continue
            ket = tuple(ket)
            bra = tuple(bra)
            if len(ket) != n_modes or len(bra) != n_modes:
                raise ModeError(
                    f"occupation length {len(ket)}/{len(bra)} does not match "
                    f"{n_modes} modes"
                )
            for occ in (ket, bra):
                for n in occ:
                    if not 0 <= n <= n_max:
                        raise ValueError(f"occupation {occ} outside [0, {n_max}]")
            clean[(ket, bra)] = value
        self.modes = modes
        self.n_max = int(n_max)
        self.entries = clean
        self._index = {label: k for k, label in enumerate(modes)}

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise ModeError(f"unknown mode label {label!r}") from None

    def trace(self) -> float:
        return sum(v for (ket, bra), v in self.entries.items() if ket == bra)

    def entry(self, ket, bra) -> float:
        return self.entries.get((tuple(ket), tuple(bra)), 0.0)

    def dump(self) -> str:
        """One line per entry, ``|ket⟩⟨bra| coefficient``, occupations as
        digit strings, sorted lexicographically."""
        lines = []
        for (ket, bra) in sorted(self.entries):
            digits_k = "".join(str(n) for n in ket)
            digits_b = "".join(str(n) for n in bra)
            lines.append(f"|{digits_k}⟩⟨{digits_b}| {self.entries[(ket, bra)]!r}")
        return "\n".join(lines)

    def __repr__(self):
        return (
            f"{type(self).__name__}(modes={self.modes!r}, "
            f"nnz={len(self.entries)}, n_max={self.n_max})"
        )


class DensityOperator(SparseOperator):
    """Hermitian, sub-normalized sparse operator (all the rho's live here).

    Construction checks the real-Hermitian symmetry and that the trace sits
    in [0, 1] up to tolerance; positivity is asserted in tests on the dense
    embedding, not per operation.
    """

    HERM_TOL = 1e-9
    TRACE_TOL = 1e-9

    def __init__(self, modes, entries, n_max: int = DEFAULT_N_MAX):
        super().__init__(modes, entries, n_max)
        for (ket, bra), value in self.entries.items():
            mirror = self.entries.get((bra, ket), 0.0)
            if abs(value - mirror) > self.HERM_TOL * (abs(value) + 1.0):
                raise ValueError(
                    f"non-Hermitian entry pair {ket}/{bra}: {value} vs {mirror}"
                )
        tr = self.trace()
        if not -self.TRACE_TOL <= tr <= 1.0 + self.TRACE_TOL:
            raise ValueError(f"trace {tr} outside [0, 1]")


def number_state(modes: Iterable[str], occupations: Iterable[int],
                 n_max: int = DEFAULT_N_MAX) -> DensityOperator:
    """Pure product number state |occupations⟩⟨occupations|."""
    occ = tuple(occupations)
    return DensityOperator(modes, {(occ, occ): 1.0}, n_max)


def vacuum_state(modes: Iterable[str], n_max: int = DEFAULT_N_MAX) -> DensityOperator:
    modes = tuple(modes)
    return number_state(modes, (0,) * len(modes), n_max)


def tensor(a: DensityOperator, b: DensityOperator) -> DensityOperator:
    """Tensor product; mode lists concatenate and must be disjoint."""
    overlap = set(a.modes) & set(b.modes)
    if overlap:
        raise ModeError(f"tensor factors share mode labels {sorted(overlap)}")
    entries: dict[EntryKey, float] = {}
    for (ka, ba), va in a.entries.items():
        for (kb, bb), vb in b.entries.items():
            entries[(ka + kb, ba + bb)] = va * vb
    return DensityOperator(a.modes + b.modes, entries, max(a.n_max, b.n_max))


def partial_trace(rho: DensityOperator, drop: Iterable[str]) -> DensityOperator:
    """Trace out the ``drop`` modes.

    An entry survives only when the dropped-mode occupations of ket and bra
    match; the total trace is preserved.
    """
    drop = set(drop)
    pos = {rho.index(label) for label in drop}
    keep = [k for k in range(len(rho.modes)) if k not in pos]
    keep_modes = tuple(rho.modes[k] for k in keep)
    acc: dict = {}
    for (ket, bra), v in rho.entries.items():
        if any(ket[k] != bra[k] for k in pos):
            continue
        new_ket = tuple(ket[k] for k in keep)
        new_bra = tuple(bra[k] for k in keep)
        accumulate(acc, (new_ket, new_bra), v)
    return DensityOperator(keep_modes, finalize(acc), rho.n_max)


def relabel(rho: DensityOperator, mapping: Mapping[str, str]) -> DensityOperator:
    """Rename modes; labels absent from ``mapping`` are kept as-is."""
    for label in mapping:
        rho.index(label)  # raises on unknown labels
    modes = tuple(mapping.get(label, label) for label in rho.modes)
    return DensityOperator(modes, rho.entries, rho.n_max)


def expectation(rho: DensityOperator, m: SparseOperator) -> float:
    """tr(rho (M ⊗ I)) with M acting on a subset of rho's modes."""
    pos = [rho.index(label) for label in m.modes]
    pos_set = set(pos)
    rest = [k for k in range(len(rho.modes)) if k not in pos_set]
    total = 0.0
    for (ket, bra), v in rho.entries.items():
        if any(ket[k] != bra[k] for k in rest):
            continue
        ket_m = tuple(ket[k] for k in pos)
        bra_m = tuple(bra[k] for k in pos)
        w = m.entries.get((bra_m, ket_m))
        if w is not None:
            total += v * w
    return total
