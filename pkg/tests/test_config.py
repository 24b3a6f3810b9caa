import pytest

from rashomon_audit.config import AuditConfig, config_from_dict, load_config
from rashomon_audit.errors import ConfigError


def test_defaults_valid():
    cfg = AuditConfig().validate()
    assert cfg.folds == 10 and cfg.top_k == 3 and cfg.epsilon == 0.05 and cfg.alpha == 0.05
    assert cfg.similarity.j_list == [1, 3, 5] and cfg.shap.background_size == 64
    assert len(cfg.families) == 12


def test_yaml_roundtrip_and_hash(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("seed: 4\nshap:\n  background_size: 16\nsimilarity:\n  pairing: per-fold\n")
    cfg = load_config(p)
    assert cfg.seed == 4 and cfg.shap.background_size == 16 and cfg.similarity.pairing == "per-fold"
    assert config_from_dict(cfg.to_dict()).hash() == cfg.hash()
    assert AuditConfig(seed=5).hash() != cfg.hash()


@pytest.mark.parametrize("text,line,needle", [
    ("seed: 1\nfolds: 1\n", 2, "folds"),
    ("seed: 1\n\nbogus: 3\n", 3, "bogus"),
    ("shap:\n  background_size: 8\n  evaluator: fast\n", 3, "shap.evaluator"),
    ("families: [lr, xgb, dt]\n", 1, "families"),
    ("data:\n  nope: 1\n", 2, "data.nope"),
])
def test_line_precise_errors(tmp_path, text, line, needle):
    p = tmp_path / "c.yaml"
    p.write_text(text)
    with pytest.raises(ConfigError) as exc:
        load_config(p)
    assert f"line {line}" in str(exc.value) and needle in str(exc.value)


def test_syntax_error_reports_line(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("seed: 1\nfolds: [1, 2\n")
    with pytest.raises(ConfigError, match="line"):
        load_config(p)
