"""Operation counters for the shift-add cost model.

Shifts are exponent manipulations and are tallied separately from
multiplications; reporting code typically prices them like additions.
"""

from dataclasses import dataclass


@dataclass
class OpCount:
    additions: int = 0
    multiplications: int = 0
    shifts: int = 0

    def add(self, additions=0, multiplications=0, shifts=0):
        self.additions += additions
        self.multiplications += multiplications
        self.shifts += shifts

    def merge(self, other: "OpCount") -> "OpCount":
        """Fold another counter into this one (used after parallel sections)."""
        self.additions += other.additions
        self.multiplications += other.multiplications
        self.shifts += other.shifts
        return self

    def total(self) -> int:
        return self.additions + self.multiplications + self.shifts

    def as_tuple(self):
        return (self.additions, self.multiplications, self.shifts)
