"""Complex values stored as (log-modulus, argument).

Products of exponentially large or small factors stay representable because
only log-moduli are added; conversion back to an ordinary complex number is
refused beyond the floating-point range.
"""

import cmath
import math
from dataclasses import dataclass

from .errors import OverflowGuardError

OVERFLOW_LOG = 700.0  # just under log(float max)


def _wrap_angle(a):
    """Reduce an angle to (-pi, pi]."""
    a = math.fmod(a, 2 * math.pi)
    if a > math.pi:
        a -= 2 * math.pi
    elif a <= -math.pi:
        a += 2 * math.pi
    return a


@dataclass(frozen=True)
class LogScaledComplex:
    """A complex number as exp(log_mod + 1j*arg); log_mod = -inf encodes zero."""

    log_mod: float
    arg: float

    def __post_init__(self):
        object.__setattr__(self, "arg", _wrap_angle(self.arg))

    @classmethod
    def from_complex(cls, z):
        z = complex(z)
        if z == 0:
            return cls(float("-inf"), 0.0)
        return cls(math.log(abs(z)), cmath.phase(z))

    @classmethod
    def from_log(cls, log_mod, arg):
        return cls(float(log_mod), float(arg))

    def to_complex(self, max_log=OVERFLOW_LOG):
        if self.log_mod == float("-inf"):
            return 0.0 + 0.0j
        if self.log_mod > max_log:
            raise OverflowGuardError(
                f"log-modulus {self.log_mod:.3g} exceeds conversion threshold {max_log:g}"
            )
        return cmath.exp(self.log_mod + 1j * self.arg)

    def combine(self, other):
        """Product: log-moduli add, arguments add modulo 2 pi."""
        return LogScaledComplex(self.log_mod + other.log_mod, self.arg + other.arg)

    def scaled(self, factor):
        """Multiply by an ordinary complex factor."""
        return self.combine(LogScaledComplex.from_complex(factor))

    def reciprocal(self):
        if self.log_mod == float("-inf"):
            raise ZeroDivisionError("reciprocal of log-scaled zero")
        return LogScaledComplex(-self.log_mod, -self.arg)

    def power(self, exponent):
        """Real power along the stored (already unwrapped) argument."""
        return LogScaledComplex(self.log_mod * exponent, self.arg * exponent)

    def add(self, other):
        """Sum via complex log-sum-exp: factor out the larger modulus."""
        if self.log_mod == float("-inf"):
            return other
        if other.log_mod == float("-inf"):
            return self
        big, small = (self, other) if self.log_mod >= other.log_mod else (other, self)
        rest = 1.0 + cmath.exp(
            (small.log_mod - big.log_mod) + 1j * (small.arg - big.arg)
        )
        if rest == 0:
            return LogScaledComplex(float("-inf"), 0.0)
        return LogScaledComplex(
            big.log_mod + math.log(abs(rest)), big.arg + cmath.phase(rest)
        )
