import pytest

from treespike import (
    CategoryPath,
    ConfigError,
    DetectorConfig,
    HierarchySchema,
    UnknownSegment,
    resolve_path,
    validate_config,
)

from conftest import schema_from


class TestCategoryPath:
    def test_parse_and_depth(self):
        p = CategoryPath.parse("TV/NoService")
        assert p.segments == ("TV", "NoService")
        assert p.depth == 2
        assert str(p) == "TV/NoService"

    def test_rejects_empty_and_separator_segments(self):
        with pytest.raises(ValueError):
            CategoryPath(())
        with pytest.raises(ValueError):
            CategoryPath(("a", ""))
        with pytest.raises(ValueError):
            CategoryPath(("a/b",))


class TestResolvePath:
    def test_leaf_lookup(self):
        schema = schema_from("TV/NoService")
        node = resolve_path(schema, "TV/NoService")
        assert schema.is_leaf(node)
        assert schema.path_str(node) == "TV/NoService"

    def test_interior_lookup(self):
        schema = schema_from("TV/NoService")
        node = resolve_path(schema, "TV")
        assert node == 0
        assert not schema.is_leaf(node)

    def test_unknown_segment_position(self):
        schema = schema_from("TV/NoService")
        with pytest.raises(UnknownSegment) as err:
            resolve_path(schema, "TV/Billing")
        assert err.value.position == 2
        with pytest.raises(UnknownSegment) as err:
            resolve_path(schema, "Phone")
        assert err.value.position == 1

    def test_round_trip_for_every_node(self):
        schema = schema_from(
            "all/a0/b0", "all/a0/b1", "all/a1/b0", "all/a1/b1", "all/a2/b0"
        )
        for node in range(schema.node_count):
            assert schema.resolve(schema.path_of(node)) == node

    def test_leaf_count_matches_distinct_paths(self):
        paths = ["all/a0/b0", "all/a0/b1", "all/a1/b0"]
        schema = schema_from(*paths)
        assert len(schema.leaf_ids) == len(set(paths))


class TestSchemaConstruction:
    def test_prefix_path_rejected(self):
        with pytest.raises(ValueError, match="interior"):
            schema_from("all/a", "all/a/b")

    def test_conflicting_roots_rejected(self):
        with pytest.raises(ValueError, match="root"):
            schema_from("all/a", "other/b")

    def test_depths_and_descendants(self):
        schema = schema_from("all/a0/b0", "all/a0/b1")
        a0 = schema.resolve("all/a0")
        assert schema.depth[0] == 0
        assert schema.depth[a0] == 1
        assert schema.max_depth == 2
        assert set(schema.descendants(0)) == set(range(1, schema.node_count))


class TestValidateConfig:
    def test_paper_style_config_is_ok(self):
        # 15-minute units, 12-week window, daily period of 96 units
        cfg = DetectorConfig(
            delta=900, shift=900, window_len=8064, theta=25.0, rt=2.8, dt=8.0,
            periods=(86400,),
        )
        assert validate_config(cfg) == []
        assert cfg.period_units() == (96,)

    def test_window_below_two_cycles(self):
        cfg = DetectorConfig(delta=900, window_len=100, periods=(86400,))
        problems = validate_config(cfg)
        assert any("two seasonal cycles" in p for p in problems)

    def test_rt_must_exceed_one(self):
        cfg = DetectorConfig(rt=0.5)
        assert any("rt" in p for p in validate_config(cfg))

    def test_all_violations_reported_at_once(self):
        cfg = DetectorConfig(
            delta=900, shift=700, window_len=10, theta=0, rt=0.5, dt=-1,
            alpha=2.0, periods=(1000,), split_rule="nope", ref_levels=-1,
            lam=0, eta=0,
        )
        problems = validate_config(cfg)
        assert len(problems) >= 9

    def test_from_mapping_round_trip(self):
        cfg = DetectorConfig.from_mapping(
            {
                "delta": "900", "shift": "900", "window_len": "8064",
                "theta": "25", "rt": "2.8", "dt": "8", "alpha": "0.1",
                "beta": "0.01", "gamma": "0.1", "periods": "86400, 604800",
                "xi": "0.76", "split_rule": "ewma(0.4)", "ref_levels": "2",
                "lambda": "4", "eta": "2",
            }
        )
        assert cfg.periods == (86400, 604800)
        assert cfg.lam == 4
        assert validate_config(cfg) == []

    def test_from_mapping_rejects_unknown_keys(self):
        with pytest.raises(ConfigError):
            DetectorConfig.from_mapping({"thetaa": "5"})
