"""Smoke test for the svbrdf extension module."""

import math
import tempfile

import svbrdf


def main():
    f = svbrdf.eval_disney([0.5, 0.5, 0.5], 0.0, 0.0, 1.0, 0.0, 0.0,
                           [0, 0, 1], [0, 0, 1], [0, 0, 1])
    assert all(c > 0 for c in f)

    pitch = svbrdf.pixel_pitch(26.0, 256, 256)
    assert math.isclose(pitch, 43.3 / (26.0 * math.hypot(256, 256)), rel_tol=1e-12)
    assert math.isclose(svbrdf.pseudo_huber(0.3, 0.1), 0.01 * (math.sqrt(10) - 1), rel_tol=1e-12)
    assert math.isclose(svbrdf.depth_curve(0.5), 1.0, rel_tol=1e-12)

    try:
        svbrdf.eval_disney([2.0, 0, 0], 0, 0, 0.5, 0, 0, [0, 0, 1], [0, 0, 1], [0, 0, 1])
    except ValueError:
        pass
    else:
        raise AssertionError("out-of-range baseColor was accepted")

    scene = svbrdf.SynthScene(size=64, seed=3)
    fitted = scene.fit(k=8, n_iters=2)
    assert fitted.width == 64 and fitted.height == 64
    assert 0.0 <= fitted.roughness <= 1.0

    with tempfile.TemporaryDirectory() as d:
        fitted.save(d)
        loaded = svbrdf.Bundle.load(d)
        assert loaded.labels() == fitted.labels()

    ldr = fitted.render_preview(0.1, svbrdf.ResponseCurve.gamma(2.2))
    assert len(ldr) == 64 * 64 * 3
    print("svbrdf smoke test passed; fitted roughness %.3f" % fitted.roughness)


if __name__ == "__main__":
    main()
