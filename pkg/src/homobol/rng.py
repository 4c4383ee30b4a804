"""Deterministic splittable RNG for the property suites.

All randomized checks derive from one 64-bit seed through SplitMix64, whose
state transition is fully specified by three constants so any implementation
in any language reproduces the streams:

    state  <- state + 0x9E3779B97F4A7C15            (mod 2^64)
    z      <- state
    z      <- (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9 (mod 2^64)
    z      <- (z XOR (z >> 27)) * 0x94D049BB133111EB (mod 2^64)
    output <- z XOR (z >> 31)

Uniform doubles take the top 53 bits of the output: (output >> 11) * 2^-53.
Named substreams split as child_seed = next(seed XOR fnv1a64(name)), with
FNV-1a over the UTF-8 bytes of the name (offset 0xCBF29CE484222325,
prime 0x100000001B3).
"""

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def fnv1a64(name):
    h = FNV_OFFSET
    for byte in name.encode("utf-8"):
        h = ((h ^ byte) * FNV_PRIME) & MASK
    return h


class SplitMix64:
    """SplitMix64 stream; see the module docstring for the exact contract."""

    def __init__(self, seed):
        self.state = int(seed) & MASK

    def integer(self):
        self.state = (self.state + GOLDEN) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * MIX1) & MASK
        z = ((z ^ (z >> 27)) * MIX2) & MASK
        return z ^ (z >> 31)

    def uniform(self, lo=0.0, hi=1.0):
        return lo + (hi - lo) * ((self.integer() >> 11) * 2.0**-53)

    def uniforms(self, count, lo=0.0, hi=1.0):
        return [self.uniform(lo, hi) for _ in range(count)]

    def split(self, name):
        """Independent child stream identified by a label."""
        child = SplitMix64(self.state ^ fnv1a64(name))
        child.state = child.integer()
        return child


def stream(seed, name):
    """Named substream of a run-level seed."""
    return SplitMix64(int(seed) & MASK).split(name)
