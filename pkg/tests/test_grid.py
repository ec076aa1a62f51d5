import numpy as np
import pytest

from burstlab.grid import (
    MAX_SPACING_RATIO,
    GridError,
    graded_segment,
    insert_nodes,
    join_segments,
    spacing_ratio,
    uniform_segment,
)


def test_uniform_segment_never_exceeds_spacing() -> None:
    nodes = uniform_segment(0.0, 1.0, 0.3)

    assert nodes.tolist() == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])


def test_uniform_segment_rejects_empty_range() -> None:
    with pytest.raises(GridError):
        uniform_segment(1.0, 1.0, 0.1)
    with pytest.raises(GridError):
        uniform_segment(0.0, 1.0, 0.0)


def test_graded_segment_is_fine_at_the_stop_end() -> None:
    nodes = graded_segment(-10.0, 0.0, 0.05, ratio=1.1, h_max=1.0)
    widths = np.diff(nodes)

    assert nodes[0] == -10.0
    assert nodes[-1] == 0.0
    assert widths[-1] < widths[0]
    assert widths[-1] == pytest.approx(0.05, rel=0.2)
    assert spacing_ratio(nodes) <= 1.1 + 1e-9


def test_graded_segment_rejects_steep_grading() -> None:
    with pytest.raises(GridError):
        graded_segment(0.0, 10.0, 0.1, ratio=MAX_SPACING_RATIO + 0.1)


def test_join_segments_requires_shared_end_points() -> None:
    joined = join_segments([np.array([0.0, 1.0]), np.array([1.0, 2.0, 3.0])])

    assert joined.tolist() == [0.0, 1.0, 2.0, 3.0]
    with pytest.raises(GridError):
        join_segments([np.array([0.0, 1.0]), np.array([1.5, 2.0])])


def test_insert_nodes_merges_duplicates() -> None:
    merged = insert_nodes(np.array([0.0, 1.0, 2.0]), [1.0, 1.5])

    assert merged.tolist() == [0.0, 1.0, 1.5, 2.0]


def test_spacing_ratio_of_uniform_grid_is_one() -> None:
    assert spacing_ratio(np.linspace(0.0, 1.0, 11)) == pytest.approx(1.0)
    assert spacing_ratio(np.array([0.0, 1.0, 3.0])) == pytest.approx(2.0)
