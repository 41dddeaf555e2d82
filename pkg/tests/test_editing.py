import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from sste.data.collate import collate
from sste.data.render import list_fonts, render_content
from sste.editing import (CentroidStore, EditRequest, apply_edit, centroid,
                          compute_centroids, content_tensor, facet_label_key,
                          interpolate, mix_colors, open_session,
                          project_embeddings, swap_layers)
from sste.errors import ContractViolation
from sste.generator import CODE_DIM, CODE_ROWS, FACET_LEVELS, N_LEVELS, LayerCodes
from sste.records import StyleAttributeLabel


def _codes(seed, batch=1):
    g = torch.Generator().manual_seed(seed)
    return LayerCodes(torch.randn(batch, N_LEVELS, CODE_ROWS, CODE_DIM, generator=g))


def test_facet_levels_partition_the_stack():
    seen = sorted(i for levels in FACET_LEVELS.values() for i in levels)
    assert seen == list(range(N_LEVELS))
    assert FACET_LEVELS["font"] == (1, 2, 3)  # 3 * 2 * 512 = 3072 dims


@pytest.mark.parametrize("facet", sorted(FACET_LEVELS))
def test_swap_is_an_involution(facet):
    a, b = _codes(1), _codes(2)
    sa, sb = swap_layers(a, b, FACET_LEVELS[facet])
    ra, rb = swap_layers(sa, sb, FACET_LEVELS[facet])
    assert torch.equal(ra.stack, a.stack) and torch.equal(rb.stack, b.stack)


def test_swap_moves_only_listed_levels():
    a, b = _codes(3), _codes(4)
    sa, sb = swap_layers(a, b, FACET_LEVELS["font"])
    for lvl in range(N_LEVELS):
        src_a = b if lvl in FACET_LEVELS["font"] else a
        src_b = a if lvl in FACET_LEVELS["font"] else b
        assert torch.equal(sa.level(lvl), src_a.level(lvl))
        assert torch.equal(sb.level(lvl), src_b.level(lvl))


def test_swap_rejects_empty_and_out_of_range():
    with pytest.raises(ContractViolation):
        swap_layers(_codes(5), _codes(6), ())
    with pytest.raises(ContractViolation):
        swap_layers(_codes(5), _codes(6), (5,))


def test_interpolate_endpoints():
    a, b = _codes(7), _codes(8)
    assert torch.equal(interpolate(a, b, 1.0).stack, a.stack)
    assert torch.equal(interpolate(a, b, 0.0).stack, b.stack)


def test_interpolate_subset_leaves_other_levels_at_target():
    a, b = _codes(9), _codes(10)
    out = interpolate(a, b, 0.5, levels=FACET_LEVELS["color"])
    (lvl,) = FACET_LEVELS["color"]
    assert torch.allclose(out.level(lvl), 0.5 * a.level(lvl) + 0.5 * b.level(lvl))
    for other in FACET_LEVELS["rotation"] + FACET_LEVELS["font"]:
        assert torch.equal(out.level(other), b.level(other))


@given(gamma=st.floats(0.0, 1.0, allow_nan=False))
@settings(max_examples=25, deadline=None)
def test_interpolate_is_affine_in_gamma(gamma):
    a, b = _codes(11), _codes(12)
    out = interpolate(a, b, gamma)
    expected = gamma * a.stack + (1.0 - gamma) * b.stack
    assert torch.allclose(out.stack, expected, atol=1e-6)


@pytest.mark.parametrize("gamma", [-0.1, 1.5, float("nan")])
def test_interpolate_rejects_out_of_range_gamma(gamma):
    with pytest.raises(ContractViolation):
        interpolate(_codes(13), _codes(14), gamma)


def test_interpolate_rejects_bad_level():
    with pytest.raises(ContractViolation):
        interpolate(_codes(13), _codes(14), 0.5, levels=(7,))


def test_centroid_matches_bruteforce_mean():
    batch = _codes(15, batch=6)
    member = torch.tensor([True, False, True, False, True, False])
    got = centroid(batch, member)
    oracle = (batch.stack[0] + batch.stack[2] + batch.stack[4]) / 3.0
    assert got.shape == (N_LEVELS, CODE_ROWS, CODE_DIM)
    assert torch.allclose(got, oracle, atol=1e-6)


def test_centroid_rejects_empty_group_and_bad_mask():
    batch = _codes(16, batch=3)
    with pytest.raises(ContractViolation):
        centroid(batch, torch.zeros(3, dtype=torch.bool))
    with pytest.raises(ContractViolation):
        centroid(batch, torch.ones(3))  # float mask


def test_mix_colors_closed_form():
    r, g, b = _codes(17), _codes(18), _codes(19)
    out = mix_colors(r, g, b, (0.2, 0.3, 0.5))
    (lvl,) = FACET_LEVELS["color"]
    expected = 0.5 * (0.2 * r.level(lvl) + 0.3 * g.level(lvl) + 0.5 * b.level(lvl))
    assert out.shape == (1, CODE_ROWS, CODE_DIM)
    assert torch.allclose(out, expected, atol=1e-6)
    with pytest.raises(ContractViolation):
        mix_colors(r, g, b, (1.0, 0.0))


def test_facet_label_key():
    lab = StyleAttributeLabel(rotation_deg=-7.5, font_id="DejaVuSans", color_id="red")
    assert facet_label_key("rotation", lab) == "-7.5"
    assert facet_label_key("rotation", StyleAttributeLabel(12.0, "x", "y")) == "12"
    assert facet_label_key("font", lab) == "DejaVuSans"
    assert facet_label_key("color", lab) == "red"
    with pytest.raises(ContractViolation):
        facet_label_key("weight", lab)


def test_compute_centroids_groups_by_facet_label():
    codes = _codes(20, batch=4)
    labels = [
        StyleAttributeLabel(10.0, "a", "red"),
        StyleAttributeLabel(10.0, "b", "red"),
        StyleAttributeLabel(-5.0, "a", "blue"),
        StyleAttributeLabel(10.0, "b", "red"),
    ]
    store = compute_centroids(codes, labels)
    assert store.labels("rotation") == ["-5", "10"]
    assert store.labels("font") == ["a", "b"]
    assert store.labels("color") == ["blue", "red"]
    rot10 = store.get("rotation", "10")
    assert rot10.shape == (1, CODE_ROWS, CODE_DIM)
    oracle = codes.stack[[0, 1, 3], 0].mean(dim=0, keepdim=True)
    assert torch.allclose(rot10, oracle, atol=1e-6)
    font_a = store.get("font", "a")
    assert font_a.shape == (3, CODE_ROWS, CODE_DIM)
    oracle_f = codes.stack[[0, 2]][:, list(FACET_LEVELS["font"])].mean(dim=0)
    assert torch.allclose(font_a, oracle_f, atol=1e-6)


def test_compute_centroids_requires_one_label_per_row():
    with pytest.raises(ContractViolation):
        compute_centroids(_codes(21, batch=3), [StyleAttributeLabel(0.0, "a", "red")])


def test_centroid_store_roundtrip(tmp_path):
    store = compute_centroids(_codes(22, batch=4), [
        StyleAttributeLabel(15.0, "serif", "red"),
        StyleAttributeLabel(15.0, "sans", "blue"),
        StyleAttributeLabel(0.0, "serif", "red"),
        StyleAttributeLabel(15.0, "sans", "red"),
    ])
    path = str(tmp_path / "centroids.json")
    store.save(path)
    loaded = CentroidStore.load(path)
    for facet in FACET_LEVELS:
        assert loaded.labels(facet) == store.labels(facet)
        for label in store.labels(facet):
            assert torch.allclose(loaded.get(facet, label), store.get(facet, label),
                                  atol=1e-6)
    with pytest.raises(ContractViolation):
        loaded.get("rotation", "90")
    with pytest.raises(ContractViolation):
        CentroidStore.load(str(tmp_path / "nope.json"))


def test_projection_separates_separated_clusters():
    rng = np.random.default_rng(0)
    centers = np.array([[40.0, 0, 0], [0, 40.0, 0], [0, 0, 40.0]])
    feats, labels = [], []
    for k in range(3):
        pts = rng.normal(size=(20, 3)) + centers[k]
        feats.append(np.pad(pts, ((0, 0), (0, 29))))
        labels += [k] * 20
    xy = project_embeddings(np.concatenate(feats), seed=0)
    assert xy.shape == (60, 2)
    from sklearn.metrics import silhouette_score
    assert silhouette_score(xy, labels) > 0.5


def test_projection_needs_three_rows():
    with pytest.raises(ContractViolation):
        project_embeddings(np.zeros((2, 8)))


# --- sessions -----------------------------------------------------------------


@pytest.fixture(scope="module")
def session_env(tiny_model, assets, samples):
    record, pair = samples[0]
    batch = collate([record], [pair])
    w = batch.style.shape[-1]
    fonts = list_fonts(assets.fonts_dir)
    font_id = assets.content_font or sorted(fonts)[0]

    def render_text(s: str) -> torch.Tensor:
        return content_tensor(render_content(s, fonts[font_id], font_id).pixels, w)

    session = open_session(tiny_model, batch.scene, batch.mask, batch.style,
                           batch.bboxes, record.text, render_text)
    return session, w


def test_open_session_shapes(session_env):
    session, w = session_env
    assert session.codes.stack.shape == (1, N_LEVELS, CODE_ROWS, CODE_DIM)
    assert session.background.shape == (1, 3, 64, w)
    assert session.z.shape == (1, CODE_DIM)
    img = session.image()
    assert img.shape == (1, 3, 64, w)
    assert torch.isfinite(img).all()


def test_open_session_rejects_batches(tiny_model, session_env):
    session, w = session_env
    two = lambda t: torch.cat([t, t])
    with pytest.raises(ContractViolation):
        open_session(tiny_model, two(torch.zeros(1, 3, 128, 2 * w)),
                     two(torch.zeros(1, 1, 128, 2 * w)),
                     two(session.style), torch.zeros(2, 4),
                     "ab", session.render_text)


class TestApplyEdit:

    def test_text_edit_keeps_codes(self, session_env):
        session, w = session_env
        out, img = apply_edit(session, EditRequest(text="hello"))
        assert torch.equal(out.codes.stack, session.codes.stack)
        assert out.text == "hello" and session.text != "hello"
        assert not torch.equal(out.content, session.content)
        assert img.shape == (1, 3, 64, w)

    def test_facet_edit_touches_only_bound_levels(self, session_env):
        session, _ = session_env
        target = _codes(30).stack[0, list(FACET_LEVELS["color"])]
        out, _ = apply_edit(session, EditRequest(facets={"color": target}, gamma=1.0))
        changed = [lvl for lvl in range(N_LEVELS)
                   if not torch.equal(out.codes.level(lvl), session.codes.level(lvl))]
        assert changed == list(FACET_LEVELS["color"])
        assert torch.equal(out.codes.level(4)[0], target[0])

    def test_gamma_interpolates_toward_target(self, session_env):
        session, _ = session_env
        target = _codes(31).stack[0, list(FACET_LEVELS["rotation"])]
        out, _ = apply_edit(session, EditRequest(facets={"rotation": target}, gamma=0.25))
        expected = 0.25 * target[0] + 0.75 * session.codes.level(0)
        assert torch.allclose(out.codes.level(0), expected, atol=1e-6)

    def test_identity_edit_is_noop(self, session_env):
        session, _ = session_env
        out, img = apply_edit(session, EditRequest())
        assert torch.equal(out.codes.stack, session.codes.stack)
        assert torch.equal(img, session.image())

    def test_rejections(self, session_env):
        session, _ = session_env
        good = _codes(32).stack[0, [4]]
        with pytest.raises(ContractViolation):
            apply_edit(session, EditRequest(facets={"kerning": good}))
        with pytest.raises(ContractViolation):
            apply_edit(session, EditRequest(facets={"font": good}))  # wants [3, 2, 512]
        with pytest.raises(ContractViolation):
            apply_edit(session, EditRequest(facets={"color": good}, gamma=1.2))

    def test_font_swap_composes_with_text_edit(self, session_env):
        session, w = session_env
        target = _codes(33).stack[0, list(FACET_LEVELS["font"])]
        out, img = apply_edit(session, EditRequest(text="world",
                                                   facets={"font": target}))
        for i, lvl in enumerate(FACET_LEVELS["font"]):
            assert torch.equal(out.codes.level(lvl)[0], target[i])
        assert out.text == "world"
        assert img.shape == (1, 3, 64, w)
