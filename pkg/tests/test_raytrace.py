import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rfspec.channel import ArrayGeometry, Direction, RFParams, spectrum_argmax
from rfspec.errors import DegenerateGeometryError, DomainError, PlacementError
from rfspec.metrics import compare
from rfspec.raytrace import (Reflector, Scene, box_scene, enumerate_paths, free_space_scene, match_paths,
                             order1_distances, path_gain, reflection_point_distance, sample_transmitters,
                             simulate_spectrum, transmitter_pairs)

RF = RFParams(2.412e9)
LAM = RF.wavelength_m


def wall_scene(gamma=-0.9, receiver=(2.0, 1.0, 0.5), half_widths=(math.inf, math.inf)):
    wall = Reflector((0.0, 0.0, 0.0), (1.0, 0.0, 0.0), gamma, half_widths, "wall")
    return Scene((wall,), ArrayGeometry(origin=receiver), RF, (0.0, -5.0, -5.0), (10.0, 5.0, 5.0))


def test_free_space_single_los():
    scene = free_space_scene()
    tx = np.array([1.0, 2.0, 3.0])
    paths = enumerate_paths(scene, tx, max_order=2)
    assert len(paths) == 1 and paths[0].order == 0
    assert paths[0].length == pytest.approx(np.linalg.norm(tx), rel=1e-15)


def test_single_wall_image_identity():
    scene = wall_scene()
    tx = np.array([3.0, -1.0, 2.0])
    paths = enumerate_paths(scene, tx, max_order=1)
    assert [p.order for p in paths] == [0, 1]
    image = tx * np.array([-1.0, 1.0, 1.0])
    assert paths[1].length == pytest.approx(np.linalg.norm(image - scene.receiver), rel=1e-12)
    assert abs(paths[1].points[0][0]) < 1e-12


def test_blocked_los_gives_no_paths():
    blocker = Reflector((1.0, 0.0, 0.0), (1.0, 0.0, 0.0), 0.0, (1.0, 1.0))
    scene = Scene((blocker,), ArrayGeometry(origin=(0.0, 0.0, 0.0)), RF, (-3, -3, -3), (3, 3, 3))
    assert enumerate_paths(scene, (2.0, 0.0, 0.0), max_order=0) == []
    # a segment that only grazes the rectangle's edge is not blocked
    assert len(enumerate_paths(scene, (2.0, 2.0, 0.0), max_order=0)) == 1


def test_tx_at_receiver_is_degenerate():
    scene = free_space_scene()
    with pytest.raises(DegenerateGeometryError):
        enumerate_paths(scene, (0.0, 0.0, 0.0))


def test_path_gain_examples():
    g = path_gain(1.0, (), RF)
    assert abs(g) == pytest.approx(LAM / (4 * math.pi), rel=1e-12)
    assert abs(g) == pytest.approx(9.891e-3, abs=1e-6)
    assert abs(g) ** 2 == pytest.approx(9.78e-5, abs=1e-7)
    assert path_gain(2.0, (0.0,), RF) == 0
    assert abs(path_gain(3.0, (), RF)) == pytest.approx(0.5 * abs(path_gain(1.5, (), RF)), rel=1e-12)
    with pytest.raises(DomainError):
        path_gain(0.0, (), RF)


def test_simulate_examples():
    scene = free_space_scene()
    d = Direction(45.0, 30.0)
    tx = 2.0 * d.world_vector(scene.array)
    assert spectrum_argmax(simulate_spectrum(scene, tx, 2)) == d
    a = simulate_spectrum(scene, (0.5, 0.7, 1.2), 0)
    b = simulate_spectrum(scene, (0.51, 0.7, 1.2), 0)
    assert compare(b, a).psnr_db > 30.0


def test_absorbing_walls_blocked_los_is_silent():
    room = box_scene(gamma=0.0)
    blocker = Reflector((1.5, 1.5, 1.0), (0.0, 0.0, -1.0), 0.0, (1.0, 1.0), "table")
    scene = Scene(room.reflectors + (blocker,), room.array, room.rf, room.box_min, room.box_max)
    ss = simulate_spectrum(scene, (1.5, 1.5, 2.0), 2)
    assert np.all(ss == 0)


def test_reflection_point_distance_examples():
    scene = wall_scene()
    tx = np.array([3.0, 0.0, 1.0])
    p = enumerate_paths(scene, tx, 1)[1]
    assert reflection_point_distance(p, p) == 0
    q = enumerate_paths(scene, tx + np.array([0.0, 0.05, 0.0]), 1)[1]
    assert reflection_point_distance(p, q) <= 0.05
    room = box_scene()
    paths = [x for x in enumerate_paths(room, (1.0, 1.0, 1.0), 1) if x.order == 1]
    with pytest.raises(DomainError):
        reflection_point_distance(paths[0], paths[1])


def test_scene_invariants():
    with pytest.raises(DomainError):
        Reflector((0, 0, 0), (1.0, 1.0, 0.0), 0.5)
    with pytest.raises(DomainError):
        Reflector((0, 0, 0), (1.0, 0.0, 0.0), 1.5)
    with pytest.raises(DomainError):
        Scene((), ArrayGeometry(origin=(9, 9, 9)), RF, (0, 0, 0), (1, 1, 1))
    far = Reflector((50.0, 0.0, 0.0), (1.0, 0.0, 0.0), 0.5)
    with pytest.raises(DomainError):
        Scene((far,), ArrayGeometry(), RF, (-1, -1, -1), (1, 1, 1))


def test_one_sided_reflection():
    # a wall facing away from both endpoints does not reflect
    wall = Reflector((0.0, 0.0, 0.0), (-1.0, 0.0, 0.0), -0.9)
    scene = Scene((wall,), ArrayGeometry(origin=(2.0, 0.0, 0.0)), RF, (0, -5, -5), (10, 5, 5))
    assert [p.order for p in enumerate_paths(scene, (3.0, 1.0, 1.0), 1)] == [0]


tx_in_room = st.tuples(st.floats(0.2, 2.8), st.floats(0.2, 2.8), st.floats(0.2, 2.3))


@settings(max_examples=30, deadline=None)
@given(tx_in_room)
def test_order1_length_identity_in_room(tx):
    room = box_scene()
    tx = np.asarray(tx)
    for p in enumerate_paths(room, tx, 1):
        if p.order == 1:
            image = room.reflectors[p.reflector_ids[0]].mirror(tx)
            assert p.length == pytest.approx(np.linalg.norm(image - room.receiver), rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(tx_in_room, tx_in_room)
def test_reciprocity_in_room(tx, rx):
    tx, rx = np.asarray(tx), np.asarray(rx)
    if np.linalg.norm(tx - rx) < 1e-3:
        return
    room = box_scene(receiver=tuple(rx))
    swapped = box_scene(receiver=tuple(tx))
    a = sorted(p.length for p in enumerate_paths(room, tx, 2))
    b = sorted(p.length for p in enumerate_paths(swapped, rx, 2))
    assert len(a) == len(b)
    assert np.allclose(a, b, rtol=0, atol=1e-9)


@settings(max_examples=20, deadline=None)
@given(tx_in_room)
def test_raising_order_keeps_paths(tx):
    room = box_scene()
    lower = {p.reflector_ids: p for p in enumerate_paths(room, tx, 1)}
    higher = {p.reflector_ids: p for p in enumerate_paths(room, tx, 2)}
    for ids, p in lower.items():
        assert higher[ids].gain == p.gain and higher[ids].length == p.length


def test_match_paths_by_sequence():
    room = box_scene()
    a = enumerate_paths(room, (1.0, 1.0, 1.0), 2)
    b = enumerate_paths(room, (1.02, 1.0, 1.0), 2)
    pairs = match_paths(a, b, order=1)
    assert pairs and all(p.reflector_ids == q.reflector_ids for p, q in pairs)
    assert all(p.order == 1 for p, _ in pairs)


def test_sampling_is_seeded_and_respects_clearance():
    room = box_scene()
    a = sample_transmitters(room, 50, np.random.default_rng(4))
    b = sample_transmitters(room, 50, np.random.default_rng(4))
    assert np.array_equal(a, b)
    assert all(room.inside(x, 0.1) for x in a)
    assert np.all(np.linalg.norm(a - room.receiver, axis=1) >= 0.1)
    with pytest.raises(PlacementError):
        sample_transmitters(room, 1, np.random.default_rng(0), clearance=2.0)


def test_pairs_have_exact_separation():
    room = box_scene()
    for a, b in transmitter_pairs(room, 20, 0.05, np.random.default_rng(2)):
        assert np.linalg.norm(a - b) == pytest.approx(0.05, rel=1e-12)


def test_small_separation_gives_close_reflection_points():
    room = box_scene()
    d = order1_distances(room, transmitter_pairs(room, 20, 1e-4, np.random.default_rng(0)))
    assert d and max(d) < 1e-3
