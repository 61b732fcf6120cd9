"""Target values the simulator is checked against.

Transmittivities are listed as ``(T_theta, T_phi1, ..., T_phi{n-1})`` for a
symmetric input ``|n>|n>``. Efficiencies are kept verbatim; their meaning as
a probability is not established.
"""

from __future__ import annotations

from dataclasses import dataclass

from .symbolic import TrigPolynomial, c, s


@dataclass(frozen=True)
class ReferenceRow:
    teleportee: str
    dimension: int
    inputs: tuple[int, int]
    transmittivities: tuple[float, ...]
    efficiency: float
    efficiency_note: str = ""

    @property
    def n(self) -> int:
        return len(self.transmittivities)


ROWS: tuple[ReferenceRow, ...] = (
    ReferenceRow("qubit", 2, (1, 0), (0.5,), 0.25, "with PBS"),
    ReferenceRow("qutrit", 3, (1, 1), (0.211325,), 0.06415),
    ReferenceRow("qupentit", 5, (2, 2), (0.7236068, 0.2763932), 0.008, "0.2 x 1/25"),
    ReferenceRow("quheptit", 7, (3, 3), (0.1510043, 0.6098260, 0.8495319), 5.306e-5),
    ReferenceRow("qunit", 9, (4, 4), (0.2896110, 0.5212421, 0.8281260, 0.0399748), 5.4e-9),
)

#: symmetric rows keyed by photons per branch
SYMMETRIC = {row.inputs[0]: row for row in ROWS if row.inputs[0] == row.inputs[1]}

QUTRIT_R = 0.788675

#: herald factor quoted for the |2>|2> source, before the 1/d^2 factor
QUPENTIT_SOURCE_EFFICIENCY = 0.2

#: modulus of each amplitude quoted for the |1>|1> source
QUTRIT_AMPLITUDE = 0.57735

#: share of the |1>|1> output quoted as maximally entangled
QUTRIT_ENTANGLED_FRACTION = 0.60


def reference_amplitudes(n: int) -> dict[tuple[int, int], TrigPolynomial] | None:
    """Reference amplitude polynomials on the output modes, keyed by ``(n1', n2')``.

    Variables are ``theta`` (shared first element) and ``phi1``. Only the
    ``n = 1`` and ``n = 2`` sources have reference polynomials.
    """
    ct, st = c("theta"), s("theta")
    if n == 1:
        return {
            (2, 0): -TrigPolynomial.sqrt(2) * ct * st,
            (1, 1): ct**2 - st**2,
            (0, 2): TrigPolynomial.sqrt(2) * ct * st,
        }
    if n == 2:
        cp, sp = c("phi1"), s("phi1")
        sq6 = TrigPolynomial.sqrt(6)
        a = -sq6 * cp**4 * ct**2 * (ct**2 - 1) * (5 * cp**2 - 4)
        b = sq6 * cp**2 * st * ct * (
            -3 + 10 * cp**2 - 8 * cp**4 + 6 * ct**2 - 20 * cp**2 * ct**2 + 16 * cp**4 * ct**2
        )
        cc = cp**2 * (1 - 6 * ct**2 + 6 * ct**4) * (2 * sp**2 - cp**2) ** 2
        return {(4, 0): a, (3, 1): b, (2, 2): cc}
    return None


def factored_b() -> TrigPolynomial:
    """Factored form of the ``|3,1>`` amplitude for ``n = 2``."""
    ct, st, cp = c("theta"), s("theta"), c("phi1")
    return (
        TrigPolynomial.sqrt(6) * cp**2 * st * ct * (ct**2 - st**2) * (2 * cp**2 - 1) * (4 * cp**2 - 3)
    )
