"""Small stand-ins shaped like the public datasets (not the real data)."""
import numpy as np

from mida.dataio import DatasetTable


def fake_gas(per_batch=24, m=128, seed=0):
    """Ten drifting batches of six classes; batch 1 is the source."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(6, m)) * 3
    feats, lab, bat = [], [], []
    for b in range(1, 11):
        drift = rng.normal(size=m) * 0.5 * b
        for i in range(per_batch):
            c = i % 6
            feats.append(centers[c] + drift + rng.normal(size=m))
            lab.append(str(c + 1))
            bat.append(b)
    role = ["source-labeled" if b == 1 else "target-test" for b in bat]
    return DatasetTable.from_arrays(np.array(feats), labels=lab, batch=np.array(bat), time=np.array(bat, float),
                                    role=role)


def fake_corn(seed=0):
    """Three 'instruments' measuring the same 80 samples with gain/offset."""
    rng = np.random.default_rng(seed)
    props = rng.normal(size=(80, 4))
    base = 0.05 * (props @ rng.normal(size=(4, 700))) + 0.01 * rng.normal(size=(80, 700))
    return {"m5": base, "mp5": base + 0.02, "mp6": 0.97 * base - 0.01, "propvals": props}
