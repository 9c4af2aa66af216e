"""Ball-and-pipe protocol: decoding rules and post-selected counterfactuality."""
import pytest

from cfclab import generate_message, run_classical


def test_all_zero_message():
    transcript = run_classical([0] * 10)
    # even minutes: no ball, kept; odd minutes: ball, discarded
    for r in transcript.records:
        if r.parity == "even":
            assert not r.ball_sent and r.kept
        else:
            assert r.ball_sent and not r.kept
    assert len(transcript.kept_indices) == 5


def test_decoding_always_correct():
    for seed in range(5):
        message = generate_message(200, seed)
        transcript = run_classical(message)
        assert transcript.decoded_bits == tuple(message)


def test_kept_bits_counterfactual_for_any_message():
    for seed in range(10):
        transcript = run_classical(generate_message(500, seed))
        assert transcript.kept_all_counterfactual()
        for i in transcript.kept_indices:
            assert not transcript.records[i].channel_crossing


def test_crossings_equal_transmitted_balls():
    message = generate_message(1000, 3)
    transcript = run_classical(message)
    want = sum(
        1
        for i, bit in enumerate(message)
        if ((i + 1) % 2 == 0 and bit == 1) or ((i + 1) % 2 == 1 and bit == 0)
    )
    assert transcript.crossing_count == want
    assert transcript.crossing_count == sum(r.ball_sent for r in transcript.records)


def test_sent_iff_crossing():
    transcript = run_classical(generate_message(100, 4))
    for r in transcript.records:
        assert r.ball_sent == r.channel_crossing == r.ball_received


def test_balanced_message_discard_fraction():
    transcript = run_classical(generate_message(10000, 0))
    assert abs(transcript.discard_fraction - 0.5) <= 0.02


def test_csv_export():
    transcript = run_classical([1, 0, 1])
    lines = transcript.to_csv().splitlines()
    assert lines[0] == "minute,parity,bit,sent,received,kept"
    # minute 1 (odd), bit 1: no ball, kept
    assert lines[1] == "1,odd,1,0,0,1"
    # minute 2 (even), bit 0: no ball, kept
    assert lines[2] == "2,even,0,0,0,1"
    # minute 3 (odd), bit 1: no ball, kept
    assert lines[3] == "3,odd,1,0,0,1"


def test_deterministic_given_message():
    message = generate_message(64, 9)
    assert run_classical(message) == run_classical(message)


def test_empty_message_rejected():
    with pytest.raises(ValueError):
        run_classical([])


def test_non_bit_rejected():
    with pytest.raises(ValueError):
        run_classical([0, 2, 1])
