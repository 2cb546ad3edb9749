import numpy as np
import pytest

from cubesheaf.analysis import (
    DecodeStatus, SmallSetFlipDecoder, decoder_checks, simulate_decoding, small_set_flip_decode
)
from cubesheaf.core.batch_processor import BatchProcessor
from cubesheaf.core.config import WorkerConfig
from cubesheaf.errors import LevelOutOfRange


def vertex_error(SC, index):
    e = np.zeros(SC.dim(0), dtype=np.int64)
    e[index] = 1
    return e


def test_single_vertex_error_is_corrected(t1_instance):
    SC = t1_instance.complex
    e = vertex_error(SC, 3)
    result = small_set_flip_decode(SC, 0, SC.delta(0).apply(e))
    assert result.status == DecodeStatus.SUCCESS
    assert np.array_equal(result.estimate, e)
    assert result.iterations == 1
    assert result.to_dict()["residual_weight"] == 0


def test_zero_syndrome_needs_no_flips(t1_instance):
    SC = t1_instance.complex
    result = SmallSetFlipDecoder(SC, 0).decode(np.zeros(SC.dim(1), dtype=np.int64))
    assert result.success and result.iterations == 0 and not result.estimate.any()


def test_decoder_validates_arguments(t1_instance):
    SC = t1_instance.complex
    with pytest.raises(LevelOutOfRange):
        SmallSetFlipDecoder(SC, 1)
    with pytest.raises(ValueError):
        SmallSetFlipDecoder(SC, 0, levels=[1])
    with pytest.raises(ValueError):
        SmallSetFlipDecoder(SC, 0).decode(np.zeros(3, dtype=np.int64))


def test_iteration_cap_stalls(t1_instance):
    SC = t1_instance.complex
    e = vertex_error(SC, 0) ^ vertex_error(SC, 7)
    result = SmallSetFlipDecoder(SC, 0).decode(SC.delta(0).apply(e), max_iters=1)
    assert result.iterations == 1
    assert result.status == DecodeStatus.STALLED


def test_decoder_checks_on_cube_graph(t1_instance):
    (result,) = decoder_checks(t1_instance.complex, 0)
    assert result.check_id == "decoder.single_block[0]"
    assert result.passed
    assert result.data["tested"] == 8


def test_decoder_checks_cover_whole_blocks(t2_mixed_instance):
    # 16 vertices, each with a 2-dimensional GF(2) block
    (result,) = decoder_checks(t2_mixed_instance.complex, 0)
    assert result.data["tested"] == 16 * 3
    assert result.data["sampled_blocks"] == 0


def test_simulation_frame(t1_instance):
    frame = simulate_decoding(t1_instance.complex, 0, weights=[1], shots=5, seed=2)
    assert list(frame.columns) == ["weight", "shots", "successes", "stalled", "mean_iterations", "success_rate"]
    assert frame.loc[0, "shots"] == 5
    assert frame.loc[0, "success_rate"] == 1.0


def test_simulation_is_reproducible_across_workers(t1_instance):
    SC = t1_instance.complex
    serial = simulate_decoding(SC, 0, p=[0.1, 0.3], shots=6, seed=9)
    threaded = simulate_decoding(SC, 0, p=[0.1, 0.3], shots=6, seed=9,
                                 processor=BatchProcessor(WorkerConfig(jobs=3, batch_size=2)))
    assert serial.equals(threaded)
    assert list(serial["p"]) == [0.1, 0.3]


@pytest.mark.parametrize("kwargs", [{}, {"weights": [1], "p": [0.1]}])
def test_simulation_needs_exactly_one_noise_model(t1_instance, kwargs):
    with pytest.raises(ValueError):
        simulate_decoding(t1_instance.complex, 0, **kwargs)
