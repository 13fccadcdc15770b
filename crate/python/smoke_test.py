"""Smoke test for the pyclutchsim extension module.

Build and install first:
    maturin build --release -m crates/py/Cargo.toml
    pip install target/wheels/pyclutchsim-*.whl
"""

import os
import re
import tempfile

import pyclutchsim


def small_config(path):
    text = pyclutchsim.default_config()
    text = re.sub(r"(?m)^mass_count = \d+", "mass_count = 6", text)
    text = re.sub(r"(?m)^preload_count = \d+", "preload_count = 6", text)
    text = re.sub(r"(?m)^epochs = \d+", "epochs = 300", text)
    with open(path, "w") as f:
        f.write(text)


def main():
    sim_a = pyclutchsim.Simulator(configuration="A")
    sim_b = pyclutchsim.Simulator(configuration="B")

    w0 = sim_a.onset_speed()
    assert 100.0 < w0 < 140.0, w0
    assert sim_a.transmitted_torque(0.5 * w0) == 0.0
    assert sim_a.transmitted_torque(2.0 * w0) > 0.0
    assert sim_a.torque_capacity(2.0 * w0) >= sim_a.transmitted_torque(2.0 * w0)

    alpha, hold = sim_a.solve_locked(100.0, 200.0)
    assert abs(alpha - 46.4) < 0.1, alpha

    a = sim_a.simulate()
    b = sim_b.simulate()
    assert a["modes"][:3] == ["FirstGear", "Slipping", "LockedSecond"], a["modes"]
    assert max(b["T_centrifugal"]) > max(a["T_centrifugal"])
    assert abs(a["energy_imbalance"]) < 0.01 * a["input_work"]

    speed = sim_a.full_engagement_speed(0.3, 100.0)
    assert speed is not None and speed > sim_a.onset_speed(shoe_mass=0.3, preload=100.0)

    with tempfile.TemporaryDirectory() as tmp:
        cfg = os.path.join(tmp, "small.toml")
        small_config(cfg)
        sim = pyclutchsim.Simulator(config_path=cfg, seed=3)
        surface = sim.sweep()
        assert len(surface) == 36
        model, accuracy = sim.train()
        assert 0.0 <= accuracy <= 1.0
        path = os.path.join(tmp, "model.json")
        model.save(path)
        again = pyclutchsim.Model.load(path)
        assert again.to_json() == model.to_json()
        p = again.predict_proba(0.4, 40.0)
        assert 0.0 <= p <= 1.0
        assert again.predict(0.4, 40.0) == (p >= 0.5)

    try:
        pyclutchsim.Simulator(configuration="C")
    except ValueError:
        pass
    else:
        raise AssertionError("bad configuration accepted")

    print("pyclutchsim smoke test passed")


if __name__ == "__main__":
    main()
