import json
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from orchard.camera import CylinderRegion
from orchard.errors import RecipeError
from orchard.randomizer import FocusMode, RandomizationSpec
from orchard.recipe import (CameraConfig, CameraMode, Endpoint, HDREnvironment, ImageSize, Recipe,
                            RenderOptions, SkyEnvironment, load_recipe, parse_recipe,
                            serialize_recipe)
from orchard.scatter import ScatterParams
from orchard.scene import Material
from orchard.treegen import TreeParams

FIXTURES = Path(__file__).parent / "fixtures"


def test_minimal_document_defaults():
    r = parse_recipe(b'{ "master_seed": 1, "frames": 1 }')
    assert (r.image.width, r.image.height) == (512, 512)
    assert r.tree == TreeParams()
    assert r.scatter == ScatterParams()
    assert r.environment == (SkyEnvironment(),)
    assert r.randomization.env_pool == ("sky",)
    assert r.models_per_dataset == 1


def test_length_ratio_out_of_bounds_names_field():
    with pytest.raises(RecipeError) as exc:
        parse_recipe(b'{"tree": {"length_ratio": 1.5}}')
    assert exc.value.field == "tree.length_ratio"
    assert "(0, 1]" in str(exc.value)


def test_golden_fixture_equals_hand_built():
    expected = Recipe(
        master_seed=20240611,
        frames=3,
        image=ImageSize(64, 48),
        render=RenderOptions(max_depth=3),
        tree=TreeParams(levels=3, trunk_length=2.5, length_ratio=0.55, trunk_radius=0.1,
                        radius_ratio=0.6, children_min=3, children_max=5, down_angle_deg=55.0,
                        down_angle_jitter_deg=10.0, curvature_deg=20.0, segments_per_branch=4,
                        phyllotaxis_deg=137.5, sides=6),
        scatter=ScatterParams(fruit_density=2.0, leaf_density=25.0, fruit_radius_mean=0.05,
                              fruit_radius_jitter=0.1, leaf_size_mean=0.09, leaf_size_jitter=0.2,
                              eligible_min_level=1, fruit_stem_length=0.03, fruit_subdivision=1),
        camera=CameraConfig(fov_deg=55.0, mode=CameraMode.RANDOM),
        randomization=RandomizationSpec(spp_range=(4, 8), aperture_range=(0.0, 0.01),
                                        focus_mode=FocusMode.AT_TARGET, env_pool=("noon", "dusk"),
                                        env_change_period=2),
        environment=(SkyEnvironment(id="noon", sun_intensity=40.0, width=64, height=32),
                     HDREnvironment(id="dusk", path="dusk_32x16.hdr")),
        materials={"fruit": Material((0.75, 0.12, 0.06), 0.2, 0.1)},
        models_per_dataset=1,
    )
    assert load_recipe(FIXTURES / "golden_recipe.json") == expected


@pytest.mark.parametrize("doc, field", [
    ('{"tre": {}}', "tre"),
    ('{"tree": {"lenght_ratio": 0.5}}', "tree.lenght_ratio"),
    ('{"randomization": {"spp": [1, 2]}}', "randomization.spp"),
    ('{"environment": [{"id": "a", "sun_power": 3}]}', "environment[0].sun_power"),
])
def test_unknown_keys_rejected(doc, field):
    with pytest.raises(RecipeError) as exc:
        parse_recipe(doc)
    assert exc.value.field == field


def test_syntax_error_reports_position():
    with pytest.raises(RecipeError) as exc:
        parse_recipe(b'{\n  "frames": 3,\n  "tree": {"levels": }\n}')
    assert (exc.value.line, exc.value.column) == (3, 22)


@pytest.mark.parametrize("doc, field", [
    ('{"frames": 0}', "frames"),
    ('{"frames": 2, "models_per_dataset": 3}', "models_per_dataset"),
    ('{"frames": "3"}', "frames"),
    ('{"image": {"width": 0}}', "image.width"),
    ('{"randomization": {"env_pool": ["nope"]}}', "randomization.env_pool"),
    ('{"camera": {"mode": "orbit"}}', "camera.mode"),
    ('{"materials": {"fruit": {"albedo": [2, 0, 0]}}}', "materials.fruit"),
    ('{"environment": [{"id": "x", "kind": "hdr", "path": "missing.hdr"}]}', "environment.path"),
])
def test_semantic_errors_name_field(doc, field):
    with pytest.raises(RecipeError) as exc:
        parse_recipe(doc)
    assert exc.value.field == field


def test_asset_search_uses_env_var(tmp_path, monkeypatch):
    doc = '{"environment": [{"id": "d", "kind": "hdr", "path": "dusk_32x16.hdr"}]}'
    with pytest.raises(RecipeError):
        parse_recipe(doc, base_dir=tmp_path)
    monkeypatch.setenv("ORCHARD_ASSET_DIR", str(FIXTURES))
    assert parse_recipe(doc, base_dir=tmp_path).environment[0].path == "dusk_32x16.hdr"


def test_trajectory_mode_needs_endpoints():
    with pytest.raises(RecipeError):
        parse_recipe('{"camera": {"mode": "trajectory"}}')
    r = parse_recipe('{"camera": {"mode": "TRAJECTORY", "start": {"origin": [5, 0, 1], "target": [0, 0, 1]},'
                     ' "end": {"origin": [0, 5, 1], "target": [0, 0, 2]}}}')
    assert r.camera.end == Endpoint((0.0, 5.0, 1.0), (0.0, 0.0, 2.0))


finite = dict(allow_nan=False, allow_infinity=False)
rgb = st.tuples(*[st.floats(0.0, 1.0, **finite)] * 3)

recipes = st.builds(
    Recipe,
    master_seed=st.integers(0, 2**64 - 1),
    frames=st.just(6),
    image=st.builds(ImageSize, st.integers(1, 4096), st.integers(1, 4096)),
    render=st.builds(RenderOptions, st.integers(1, 12)),
    tree=st.builds(TreeParams, levels=st.integers(1, 5), length_ratio=st.floats(0.05, 1.0),
                   down_angle_deg=st.floats(-170, 170), curvature_deg=st.floats(-90, 90),
                   sides=st.integers(3, 16)),
    scatter=st.builds(ScatterParams, fruit_density=st.floats(0, 10), leaf_density=st.floats(0, 100),
                      fruit_subdivision=st.integers(0, 3)),
    camera=st.builds(CameraConfig, fov_deg=st.floats(1.0, 179.0),
                     external=st.just(CylinderRegion((0, 0, 1), 4.0, 6.0, 0.0, 2.0)),
                     internal=st.just(CylinderRegion((0, 0, 1), 0.0, 1.0, -1.0, 1.0))),
    randomization=st.builds(RandomizationSpec, spp_range=st.just((2, 9)),
                            aperture_range=st.just((0.0, 0.5)),
                            focus_mode=st.sampled_from(FocusMode), env_pool=st.just(("s", "h")),
                            env_change_period=st.integers(1, 9)),
    environment=st.just((SkyEnvironment(id="s", sun_intensity=3.5), HDREnvironment("h", "x.hdr"))),
    materials=st.dictionaries(st.sampled_from(["trunk", "branch", "leaf", "fruit"]),
                              st.builds(Material, rgb, st.floats(0, 1), st.floats(0, 1))),
    models_per_dataset=st.integers(1, 6),
)


@given(recipes)
def test_serialize_parse_round_trip(recipe):
    text = serialize_recipe(recipe)
    json.loads(text)
    assert parse_recipe(text, check_assets=False) == recipe
