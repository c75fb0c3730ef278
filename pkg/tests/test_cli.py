"""Tests for the command-line front end, job models and the result cache."""

import io
import json

import pytest
from pydantic import ValidationError

import cli
from config import config
from errors import TailNotConvergent
from models import JobConfig
from result_cache import ResultCache, cache_key
from weakly_holomorphic import Obstruction

ZETA5 = ["--D", "5", "--delta=-5/2,1/2"]


def run_cli(*argv):
    out = io.StringIO()
    code = cli.main(list(argv), stream=out)
    return code, out.getvalue()


class TestFieldCommand:
    def test_zeta5_invariants(self):
        code, out = run_cli("field", *ZETA5)
        data = json.loads(out)
        assert code == cli.EXIT_OK
        assert data["d_E"] == 125
        assert data["w_E"] == 10
        assert data["lambda_zero"] == "2/5"

    def test_text_format(self):
        code, out = run_cli("field", *ZETA5, "--format", "text")
        assert code == 0
        assert "D: 5" in out.splitlines()

    def test_non_prime_discriminant(self):
        code, out = run_cli("field", "--D", "21", "--delta=-5,0")
        data = json.loads(out)
        assert code == cli.EXIT_HYPOTHESIS
        assert data["error"] == "HypothesisViolated"
        assert data["details"]["failures"] == ["D ≡ 1 mod 4 prime"]

    def test_delta_not_totally_negative(self):
        code, out = run_cli("field", "--D", "5", "--delta=5,1")
        assert code == cli.EXIT_HYPOTHESIS
        assert "delta totally negative" in json.loads(out)["details"]["failures"]

    def test_invalid_job(self):
        code, out = run_cli("field", *ZETA5, "--precision", "32")
        assert code == cli.EXIT_HYPOTHESIS
        assert json.loads(out)["exit_code"] == 2


class TestEisensteinCommand:
    def test_table(self):
        code, out = run_cli("eisenstein", *ZETA5, "--mmax", "6")
        data = json.loads(out)
        assert code == 0
        assert data["m_max"] == 6
        assert data["b"]["4"]["logs"] == {"2": "4"}

    def test_csv(self):
        code, out = run_cli("eisenstein", *ZETA5, "--mmax", "4", "--format", "csv")
        lines = out.splitlines()
        assert code == 0
        assert lines[0] == "m,prime,coefficient"
        assert "4,2,4" in lines

    def test_reuses_cached_prefix(self, mocker):
        run_cli("eisenstein", *ZETA5, "--mmax", "4")
        spy = mocker.spy(cli, "bm_table")
        run_cli("eisenstein", *ZETA5, "--mmax", "6")
        previous = spy.call_args.kwargs["previous"]
        assert previous is not None
        assert previous.m_max == 4

    def test_no_cache_skips_prefix(self, mocker):
        run_cli("eisenstein", *ZETA5, "--mmax", "4")
        spy = mocker.spy(cli, "bm_table")
        run_cli("eisenstein", *ZETA5, "--mmax", "6", "--no-cache")
        assert spy.call_args.kwargs["previous"] is None


class TestVerifyCommand:
    """Exit codes and reports of verify."""

    def test_obstruction(self, mocker):
        mocker.patch(
            "cli.construct_weakly_holomorphic",
            return_value=Obstruction(5, {-1: 1}, [12, 24], 4, 6, "no weight-0 form"),
        )
        code, out = run_cli("verify", *ZETA5, "--no-cache")
        data = json.loads(out)
        assert code == cli.EXIT_OBSTRUCTION
        assert data["weights_tried"] == [12, 24]
        assert data["principal_part"] == {"-1": 1}

    def test_non_residue_exponent_is_an_obstruction(self):
        """(5/-2) = -1, so no plus-space form has principal part q^-2."""
        code, out = run_cli("verify", *ZETA5, "--no-cache", "--principal-part=-2:1")
        data = json.loads(out)
        assert code == cli.EXIT_OBSTRUCTION
        assert data["principal_part"] == {"-2": 1}
        assert data["weights_tried"] == []
        assert "non-residue" in data["message"]

    def test_tail_not_convergent(self, mocker):
        mocker.patch("cli.construct_weakly_holomorphic", return_value=mocker.Mock())
        mocker.patch("cli.cm_value", side_effect=TailNotConvergent("tail 0.3 exceeds 1e-06"))
        code, out = run_cli("verify", *ZETA5, "--no-cache")
        assert code == cli.EXIT_TAIL
        assert json.loads(out)["error"] == "TailNotConvergent"

    @pytest.mark.slow
    def test_zeta5_flagship_end_to_end(self):
        code, out = run_cli("verify", *ZETA5, "--no-cache", "--trace-bound", "200")
        data = json.loads(out)
        assert code == cli.EXIT_OK
        assert data["pass"] is True
        assert len(data["points"]) == 4
        assert data["form"]["principal_part"] == {"-1": "1"}

    def test_principal_part_flag(self, mocker):
        construct = mocker.patch(
            "cli.construct_weakly_holomorphic",
            return_value=Obstruction(5, {-1: 1, -4: 2}, [12], 1, 2, "no form"),
        )
        run_cli("verify", *ZETA5, "--no-cache", "--principal-part=-1:1,-4:2", "--trace-bound", "150")
        args, kwargs = construct.call_args
        assert args == (5, {-4: 2, -1: 1})
        assert kwargs["precision"] == 151


class TestCaching:
    def test_repeat_runs_are_identical(self, tmp_path):
        first = run_cli("field", *ZETA5, "--cache-dir", str(tmp_path / "c"))
        second = run_cli("field", *ZETA5, "--cache-dir", str(tmp_path / "c"))
        assert first == second
        assert len(list((tmp_path / "c").glob("*.json"))) == 1

    def test_served_from_cache(self, tmp_path, mocker):
        run_cli("field", *ZETA5, "--cache-dir", str(tmp_path))
        loader = mocker.patch("cli.load_field")
        code, out = run_cli("field", *ZETA5, "--cache-dir", str(tmp_path))
        assert code == 0
        assert json.loads(out)["d_E"] == 125
        loader.assert_not_called()


class TestParsing:
    def test_principal_part(self):
        assert cli.parse_principal_part("-1:1,-4:2") == {-1: 1, -4: 2}
        assert cli.parse_principal_part("-1, -1:2") == {-1: 3}
        assert cli.parse_principal_part("") == {}

    def test_job_config(self):
        job = JobConfig(command="field", D=5, delta="-5/2, 1/2")
        assert job.delta == ("-5/2", "1/2")
        assert job.descriptor() == {"D": 5, "delta": ["-5/2", "1/2"]}
        assert job.parameters() == {}

    def test_job_config_rejects_bad_input(self):
        with pytest.raises(ValidationError):
            JobConfig(command="field", D=5, delta="1")
        with pytest.raises(ValidationError):
            JobConfig(command="field", D=5, delta="-5/2,1/2", precision=32)
        with pytest.raises(ValidationError):
            JobConfig(command="verify", D=5, delta="-5/2,1/2", principal_part={1: 1})
        with pytest.raises(ValidationError):
            JobConfig(command="eisenstein", D=5, delta="-5/2,1/2", m_max=0)
        with pytest.raises(ValidationError):
            JobConfig(command="plot", D=5, delta="-5/2,1/2")

    def test_verify_parameters(self):
        job = JobConfig(command="verify", D=5, delta="-5/2,1/2", principal_part={-4: 0, -1: 1})
        assert job.parameters()["principal_part"] == {"-1": 1}


class TestResultCache:
    def setup_method(self):
        self.descriptor = {"D": 5, "delta": ["-5/2", "1/2"]}

    def test_put_and_get(self, tmp_path):
        cache = ResultCache(str(tmp_path))
        key = cache_key("field", self.descriptor, {})
        cache.put(key, {"report": {"d_E": 125}})
        assert key in cache
        assert cache.get(key) == {"report": {"d_E": 125}}
        assert not list(tmp_path.glob(".tmp-*"))

    def test_unreadable_entry_is_a_miss(self, tmp_path):
        cache = ResultCache(str(tmp_path))
        key = cache_key("field", self.descriptor, {})
        cache.path(key).write_text("{not json", encoding="utf-8")
        assert cache.get(key) is None

    def test_missing_entry(self, tmp_path):
        assert ResultCache(str(tmp_path)).get("0" * 64) is None

    def test_key_depends_on_inputs(self, mocker):
        base = cache_key("eisenstein", self.descriptor, {"m_max": 10})
        assert base == cache_key("eisenstein", dict(self.descriptor), {"m_max": 10})
        assert base != cache_key("eisenstein", self.descriptor, {"m_max": 11})
        assert base != cache_key("eisenstein", {"D": 13, "delta": ["-13/2", "-3/2"]}, {"m_max": 10})
        mocker.patch.object(config, "petersson_model", "gamma")
        assert base != cache_key("eisenstein", self.descriptor, {"m_max": 10})

    def test_directory_from_environment(self, tmp_path):
        assert ResultCache().directory == tmp_path / "cache"
