"""Regenerate the golden regression fixture under tests/fixtures/.

Trains a small ReLU network on the ring-vs-disk pattern, plants the checksum
activation, and picks the first test point whose backtracked trigger flips the
predicted label.  The committed model, point, and trace are byte-stable; this
script only needs rerunning if the protocol itself changes.
"""

import json
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from csumnet import backdoor, datagen, nn
from csumnet.checksum import ChecksumConfig

OUT = pathlib.Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def main():
    cfg = ChecksumConfig(sk=150)
    for seed in range(50):
        d = datagen.generate("circle", 100, seed=seed)
        model, _ = nn.train(nn.init(nn.make_spec(2, [4]), seed=seed), d,
                            nn.Hyper(epochs=80, seed=seed))
        planted = backdoor.plant(model, cfg)
        for i, p in enumerate(d.test):
            try:
                t = backdoor.backtrack_trigger(planted, p, ("x", "y"))
            except Exception:
                continue
            if not t.success:
                continue
            OUT.mkdir(parents=True, exist_ok=True)
            nn.save_model(planted, OUT / "golden_model.json")
            (OUT / "golden_point.json").write_text(json.dumps(
                {"x": repr(p.x), "y": repr(p.y), "label": p.label,
                 "pattern": "circle", "seed": seed, "test_index": i},
                indent=1) + "\n")
            (OUT / "golden_trace.json").write_text(t.to_json_str() + "\n")
            print(f"seed={seed} test_index={i} node={t.i_sel} "
                  f"success={t.success}")
            return
    raise SystemExit("no seed produced a flipping trigger")


if __name__ == "__main__":
    main()
