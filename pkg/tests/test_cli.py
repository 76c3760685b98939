"""Command surface: exit codes, trace output, CSV determinism."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from srv6sfc import cli

RUN_ARGS = ["--src", "EEEE::2", "--dst", "DDDD::2"]


def run_cli(argv, capsys):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_run_single_packet(testbed_config_path, capsys):
    code, out, _ = run_cli(
        ["run", testbed_config_path, *RUN_ARGS, "--count", "1"], capsys
    )
    assert code == cli.EXIT_OK
    lines = out.strip().splitlines()
    events = [json.loads(line) for line in lines[:-1]]
    assert len(events) == 11
    assert [e["event"] for e in events] == [
        "Classified", "Encapsulated", "Forwarded",
        "SegmentAdvanced", "Decapsulated", "VnfDelivered", "VnfReturned",
        "ReEncapsulated", "Forwarded",
        "Decapsulated", "Delivered",
    ]
    summary = json.loads(lines[-1])["summary"]
    assert summary["status"] == "ok"
    assert summary["delivered"] == 1
    assert summary["ledgers"]["nfv"] == {"f": 3, "d": 1, "e": 1, "cost_units": 4.0}


def test_run_terminal_trace_mode(testbed_config_path, capsys):
    code, out, _ = run_cli(
        ["run", testbed_config_path, *RUN_ARGS, "--count", "3", "--trace", "terminal"],
        capsys,
    )
    assert code == cli.EXIT_OK
    lines = out.strip().splitlines()
    events = [json.loads(line) for line in lines[:-1]]
    assert len(events) == 3
    assert all(e["event"] == "Delivered" for e in events)


def test_run_drop_exits_nonzero(testbed_config_path, tmp_path, capsys):
    text = Path(testbed_config_path).read_text().replace(
        "behavior=passthrough", "behavior=prefix-filter:DDDD::/64"
    )
    cfg = tmp_path / "filter.cfg"
    cfg.write_text(text)
    code, out, _ = run_cli(["run", str(cfg), *RUN_ARGS, "--count", "2"], capsys)
    assert code == cli.EXIT_DROPPED
    summary = json.loads(out.strip().splitlines()[-1])["summary"]
    assert summary["status"] == "dropped"
    assert summary["dropped"] == 2
    assert "vnf bbbb::2" in summary["drop_reasons"]


def test_missing_config_is_parse_error(tmp_path, capsys):
    code, _, err = run_cli(["run", str(tmp_path / "nope.cfg"), *RUN_ARGS], capsys)
    assert code == cli.EXIT_PARSE
    assert json.loads(err)["error"] == "ParseError"


def test_validate_ok(testbed_config_path, capsys):
    code, out, _ = run_cli(["validate", testbed_config_path], capsys)
    assert code == cli.EXIT_OK
    assert "3 nodes" in out


def test_validate_reports_all_errors(tmp_path, capsys):
    cfg = tmp_path / "broken.cfg"
    cfg.write_text(
        "[nodes]\n"
        "er1 ingress-edge addrs=AAAA::2\n"
        "[links]\n"
        "er1 ghost\n"
        "[sids]\n"
        "BBBB::2 kind=sr-unaware node=nowhere\n"
    )
    code, _, err = run_cli(["validate", str(cfg)], capsys)
    assert code == cli.EXIT_VALIDATION
    payload = json.loads(err)
    assert payload["error"] == "ValidationError"
    assert len(payload["detail"]) >= 2


def test_bench_deterministic_csvs(testbed_config_path, tmp_path, capsys):
    digests = []
    for name in ("one", "two"):
        out_dir = tmp_path / name
        code, _, _ = run_cli(
            ["bench", testbed_config_path, "--seed", "42", "--out", str(out_dir)],
            capsys,
        )
        assert code == cli.EXIT_OK
        digests.append(
            (
                (out_dir / "points.csv").read_bytes(),
                (out_dir / "regression.csv").read_bytes(),
            )
        )
    assert digests[0] == digests[1]
    assert b"SR kernel + hook" in digests[0][0]


def test_bench_single_rate_refuses_regression(testbed_config_path, tmp_path, capsys):
    code, _, err = run_cli(
        [
            "bench", testbed_config_path,
            "--scenario", "aware",
            "--rates", "5000",
            "--runs", "1",
            "--out", str(tmp_path / "b"),
        ],
        capsys,
    )
    assert code == cli.EXIT_BENCH
    payload = json.loads(err.strip().splitlines()[-1])
    assert payload["error"] == "InsufficientPoints"
    assert "regression refused" in payload["detail"]


def test_bench_table_printed(testbed_config_path, tmp_path, capsys):
    code, out, _ = run_cli(
        ["bench", testbed_config_path, "--noise", "0", "--runs", "1",
         "--rates", "1000,3000,6000,9000", "--out", str(tmp_path / "t")],
        capsys,
    )
    assert code == cli.EXIT_OK
    lines = out.splitlines()
    assert "SR kernel" in lines[0] and "SR kernel + hook" in lines[0]
    assert lines[1].startswith("k [CPU %]") and "8.9" in lines[1] and "12.5" in lines[1]
    assert lines[2].startswith("m [CPU %/kpps]") and "6.64" in lines[2] and "6.78" in lines[2]


def test_route_add_prints_updated_config(testbed_config_path, capsys):
    code, out, _ = run_cli(
        [
            "route", "add", "FFFF::/64", "via", "AAAA::1", "encap", "seg", "CCCC::2",
            "--config", testbed_config_path,
        ],
        capsys,
    )
    assert code == cli.EXIT_OK
    assert "er1 ffff::/64 chain=rt-ffff::-64" in out
    assert "rt-ffff::-64 segs=cccc::2" in out


def test_route_add_idempotent_output(testbed_config_path, capsys):
    argv = [
        "route", "add", "DDDD::2/64", "via", "AAAA::1", "encap", "seg",
        "BBBB::2,CCCC::2", "--config", testbed_config_path,
    ]
    _, first, _ = run_cli(argv, capsys)
    _, second, _ = run_cli(argv, capsys)
    assert first == second


def test_route_add_bad_prefix(testbed_config_path, capsys):
    code, _, err = run_cli(
        ["route", "add", "junk/one", "via", "AAAA::1", "encap", "seg", "CCCC::2",
         "--config", testbed_config_path],
        capsys,
    )
    assert code == cli.EXIT_VALIDATION
    assert json.loads(err)["error"] == "BadPrefix"


def test_route_add_malformed_tokens(testbed_config_path, capsys):
    code, _, err = run_cli(
        ["route", "add", "FFFF::/64", "through", "AAAA::1", "encap", "seg", "CCCC::2",
         "--config", testbed_config_path],
        capsys,
    )
    assert code == cli.EXIT_USAGE
    assert json.loads(err)["error"] == "UsageError"


def test_trace_dumps_encapsulated_packet(testbed_config_path, capsys):
    code, out, _ = run_cli(
        ["trace", testbed_config_path, "--src", "EEEE::2", "--dst", "DDDD::2",
         "--payload-bytes", "8"],
        capsys,
    )
    assert code == cli.EXIT_OK
    first = out.splitlines()[0]
    # Outer header: version 6, payload length 0x60, routing header, hl 64.
    assert first.startswith("00000000  60 00 00 00 00 60 2b 40")


def test_usage_error_exits_two(testbed_config_path, capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["run", testbed_config_path])  # --src/--dst missing
    assert info.value.code == cli.EXIT_USAGE
