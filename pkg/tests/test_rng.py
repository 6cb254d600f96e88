import numpy as np

from contraction_lab.rng import StreamFactory


def test_same_key_same_numbers():
    a = StreamFactory(5).normals(1, 2, 3, 4, 10)
    b = StreamFactory(5).normals(1, 2, 3, 4, 10)
    np.testing.assert_array_equal(a, b)


def test_distinct_keys_differ():
    f = StreamFactory(5)
    base = f.normals(1, 0, 0, 3, 50)
    for other in (f.normals(2, 0, 0, 3, 50), f.normals(1, 1, 0, 3, 50), f.normals(1, 0, 1, 3, 50),
                  StreamFactory(6).normals(1, 0, 0, 3, 50)):
        assert not np.array_equal(base, other)


def test_leading_modes_shared_across_truncations():
    f = StreamFactory(0)
    small, large = f.normals(1, 0, 7, 8, 100), f.normals(1, 0, 7, 32, 100)
    np.testing.assert_array_equal(small, large[:, :8])


def test_order_independence():
    f = StreamFactory(1)
    later = f.normals(1, 0, 9, 2, 5)
    f.normals(1, 0, 3, 2, 5)
    np.testing.assert_array_equal(later, StreamFactory(1).normals(1, 0, 9, 2, 5))


def test_standard_normal_moments():
    x = StreamFactory(3).normals(1, 0, 0, 4, 250_000)
    assert abs(x.mean()) < 5e-3
    assert abs(x.var() - 1) < 5e-3
