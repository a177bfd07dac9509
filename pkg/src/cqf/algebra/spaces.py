"""Hilbert space declarations and their tensor product.

Two kinds of factor spaces are supported: a bosonic mode (``fock``) carrying
ladder operators, and a finite set of discrete levels (``nlevel``) carrying
transition operators.  A :class:`ProductSpace` fixes the factor order once and
for all; the position of a factor defines its canonical subspace index, which
in turn fixes the canonical ordering of operator products across subspaces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import AlgebraError

FOCK = "fock"
NLEVEL = "nlevel"


@dataclass(frozen=True)
class HilbertSpace:
    """A single factor space.

    For ``nlevel`` spaces, ``levels`` lists the level labels in declaration
    order and ``ground`` names the level whose projector is eliminated from
    every canonical expression (the sum of all projectors equals one).
    """

    name: str
    kind: str
    levels: tuple[str, ...] = ()
    ground: str = ""

    def __post_init__(self):
        if self.kind not in (FOCK, NLEVEL):
            raise AlgebraError(f"unknown space kind {self.kind!r}")
        if self.kind == FOCK:
            if self.levels or self.ground:
                raise AlgebraError("fock space carries no level data")
        else:
            if len(self.levels) < 2:
                raise AlgebraError(
                    f"nlevel space {self.name!r} needs at least two levels"
                )
            if len(set(self.levels)) != len(self.levels):
                raise AlgebraError(
                    f"nlevel space {self.name!r} has duplicate level labels"
                )
            if self.ground not in self.levels:
                raise AlgebraError(
                    f"ground level {self.ground!r} is not a level of {self.name!r}"
                )

    @property
    def dim(self) -> int:
        """Finite dimension; undefined for fock factors."""
        if self.kind != NLEVEL:
            raise AlgebraError(f"fock space {self.name!r} has no finite dimension")
        return len(self.levels)

    def level_index(self, label: str) -> int:
        try:
            return self.levels.index(label)
        except ValueError:
            raise AlgebraError(
                f"space {self.name!r} has no level {label!r} "
                f"(levels: {', '.join(self.levels)})"
            ) from None

    @property
    def ground_index(self) -> int:
        return self.levels.index(self.ground)


def fock(name: str) -> HilbertSpace:
    """A bosonic mode."""
    return HilbertSpace(name=name, kind=FOCK)


def nlevel(name: str, levels, ground: str | None = None) -> HilbertSpace:
    """A discrete-level system.

    ``levels`` is either a sequence of labels or an integer n (labels
    "1".."n").  The eliminated projector defaults to the first level listed.
    """
    if isinstance(levels, int):
        labels = tuple(str(k + 1) for k in range(levels))
    else:
        labels = tuple(str(l) for l in levels)
    if ground is None:
        if not labels:
            raise AlgebraError(f"nlevel space {name!r} needs at least two levels")
        ground = labels[0]
    return HilbertSpace(name=name, kind=NLEVEL, levels=labels, ground=ground)


@dataclass(frozen=True)
class ProductSpace:
    """Ordered tensor product of factor spaces.

    Factor order is fixed at construction; operators on factor k always sort
    before operators on factor k+1 in canonical form.
    """

    factors: tuple[HilbertSpace, ...] = field(default=())

    def __post_init__(self):
        if not self.factors:
            raise AlgebraError("product space needs at least one factor")
        names = [f.name for f in self.factors]
        if len(set(names)) != len(names):
            raise AlgebraError("factor names must be unique within a product space")

    def __len__(self) -> int:
        return len(self.factors)

    def index(self, which) -> int:
        """Resolve a factor given by index, name or HilbertSpace."""
        if isinstance(which, int):
            if not 0 <= which < len(self.factors):
                raise AlgebraError(f"subspace index {which} out of range")
            return which
        if isinstance(which, HilbertSpace):
            for k, f in enumerate(self.factors):
                if f == which:
                    return k
            raise AlgebraError(f"space {which.name!r} is not a factor of this product")
        for k, f in enumerate(self.factors):
            if f.name == which:
                return k
        raise AlgebraError(f"no factor named {which!r} in this product space")

    def only(self, kind: str) -> int:
        """Index of the unique factor of the given kind, for inference."""
        hits = [k for k, f in enumerate(self.factors) if f.kind == kind]
        if len(hits) != 1:
            raise AlgebraError(
                f"cannot infer subspace: {len(hits)} factors of kind {kind!r}; "
                "specify the subspace explicitly"
            )
        return hits[0]


def product(*factors: HilbertSpace) -> ProductSpace:
    return ProductSpace(tuple(factors))
