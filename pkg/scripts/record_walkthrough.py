"""Record a full plant-vs-defend session against the real HTTP service.

The exchange log feeds the frontend's scripted walkthrough test, which replays
it through a mocked fetch and asserts the rendered strings match these
payloads character for character.
"""

import json
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from fastapi.testclient import TestClient

from csumnet.service import create_app

OUT = (pathlib.Path(__file__).resolve().parents[1] / "frontend" / "test" /
       "fixtures" / "walkthrough.json")


def main():
    log = []
    with TestClient(create_app()) as client:
        def record(method, path, body=None, stream=False):
            if stream:
                with client.stream(method, path, json=body) as r:
                    text = "".join(r.iter_text())
                    entry = {"method": method, "path": path, "body": body,
                             "status": r.status_code, "stream": text}
            else:
                r = client.request(method, path, json=body)
                entry = {"method": method, "path": path, "body": body,
                         "status": r.status_code, "response": r.json()}
            log.append(entry)
            return entry

        sid = record("POST", "/sessions")["response"]["id"]
        generic = f"/sessions/{sid}"
        record("POST", f"{generic}/dataset",
               {"pattern": "circle", "n": 100, "noise": 0.0, "seed": 0})
        record("POST", f"{generic}/train",
               {"spec": {"hidden_layers": [4]}, "hyper": {"epochs": 80}},
               stream=True)
        record("POST", f"{generic}/model/store")
        record("POST", f"{generic}/activation",
               {"kind": "RELU_CSUM", "checksum_config": {"m": 256, "sk": 150}})
        record("POST", f"{generic}/model/recall")
        record("GET", f"{generic}/boundary?grid=5")
        # click test points until one yields a flipping trigger
        for i in range(50, 100):
            r = client.post(f"{generic}/attack/backtrack",
                            json={"point_index": i})
            if r.status_code == 200 and r.json()["success"]:
                record("POST", f"{generic}/attack/backtrack",
                       {"point_index": i})
                break
        else:
            raise SystemExit("no test point produced a flipping trigger")
        record("POST", f"{generic}/attack/signature", {"m": 10, "sk": 4})
        record("POST", f"{generic}/defense/histograms", {})
        record("POST", f"{generic}/defense/robustify", {})
        record("GET", f"{generic}/dataset")

    # the replay client substitutes its own session id
    text = json.dumps(log, indent=1).replace(sid, "{session}")
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(text + "\n")
    print(f"recorded {len(log)} exchanges -> {OUT}")


if __name__ == "__main__":
    main()
