"""The seeded generator is pinned bit-for-bit by these values."""

import math

from fnslab.rng import Xorshift64Star


def test_frozen_stream():
    g = Xorshift64Star(2026)
    assert [g.next_u64() for _ in range(3)] == [
        17672631540065796048,
        8071313786998456438,
        16880677051028744357,
    ]


def test_frozen_uniforms():
    g = Xorshift64Star(2026)
    assert g.uniform() == 0.958035275463759
    assert g.uniform() == 0.4375467971337965


def test_zero_seed_is_remapped():
    g = Xorshift64Star(0)
    assert g.next_u64() == 973819730272012410


def test_same_seed_same_stream():
    a = Xorshift64Star(99)
    b = Xorshift64Star(99)
    assert [a.next_u64() for _ in range(10)] == [b.next_u64() for _ in range(10)]


def test_uniform_range_and_moments():
    g = Xorshift64Star(5)
    xs = [g.uniform() for _ in range(20000)]
    assert all(0.0 <= x < 1.0 for x in xs)
    mean = sum(xs) / len(xs)
    assert abs(mean - 0.5) < 0.01


def test_normals_moments():
    g = Xorshift64Star(11)
    xs = g.normals(20000)
    mean = sum(xs) / len(xs)
    var = sum(x * x for x in xs) / len(xs) - mean**2
    assert abs(mean) < 0.03
    assert abs(var - 1.0) < 0.05


def test_complex_normals_variance():
    g = Xorshift64Star(13)
    zs = g.complex_normals(20000)
    var = sum(abs(z) ** 2 for z in zs) / len(zs)
    assert abs(var - 1.0) < 0.05
    assert math.isfinite(sum(z.real for z in zs))
