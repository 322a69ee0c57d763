"""Write the checked-in 3LE fixture: a synthetic Starlink-like shell segment.

The sandbox this package was built in cannot reach Celestrak, so the fixture
is generated: 8 adjacent planes of the 53 deg / 550 km shell, 15 satellites
per plane, epochs scattered within +-12 h of the reference instant and mean
anomalies chosen so every satellite sits in its slot at that instant.
Replace it with a real download via ``coalition_forge.tle.fetch_3le`` when
network access is available.

    python scripts/make_starlink_fixture.py
"""

import json
import math
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from coalition_forge.tle import MU_EARTH, TleRecord, format_3le, parse3le

REFERENCE = datetime(2024, 6, 1, 12, 0, 0, tzinfo=timezone.utc)
PLANES, PER_PLANE = 8, 15
SHELL_PLANES, SHELL_PER_PLANE = 72, 22
ALTITUDE_KM, INCLINATION_DEG = 550.0, 53.0
OUT = Path(__file__).resolve().parents[1] / "src" / "coalition_forge" / "data"


def main(seed: int = 2024):
    rng = np.random.default_rng(seed)
    a = 6378.137 + ALTITUDE_KM
    n_rad = math.sqrt(MU_EARTH / a**3)
    mean_motion = n_rad * 86400.0 / (2 * math.pi)
    blocks = []
    cat = 90001
    for p in range(PLANES):
        raan = 360.0 * p / SHELL_PLANES
        for k in range(PER_PLANE):
            # phase offset between planes as in a Walker delta pattern
            slot = (360.0 * k / SHELL_PER_PLANE + p * 360.0 / (SHELL_PLANES * SHELL_PER_PLANE) * 17) % 360.0
            argp = float(rng.uniform(0, 360))
            epoch = REFERENCE + timedelta(seconds=float(rng.uniform(-12, 12) * 3600))
            dt = (REFERENCE - epoch).total_seconds()
            mean_anom = (slot - argp - math.degrees(n_rad * dt)) % 360.0
            rec = TleRecord(
                name=f"STARLINK-SIM-{cat - 90000:04d}",
                catalog_number=cat,
                epoch=epoch,
                inclination=math.radians(INCLINATION_DEG + rng.normal(0, 0.005)),
                raan=math.radians((raan + rng.normal(0, 0.01)) % 360.0),
                eccentricity=float(rng.uniform(0.00005, 0.0002)),
                arg_perigee=math.radians(argp),
                mean_anomaly=math.radians(mean_anom),
                mean_motion=mean_motion + rng.normal(0, 1e-5),
            )
            blocks.append(format_3le(rec, intl_designator=f"24{p + 1:03d}{chr(65 + k % 26)}", rev_number=1000 + k))
            cat += 1
    text = "\n".join(blocks) + "\n"
    assert len(parse3le(text)) == PLANES * PER_PLANE
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "starlink_fixture.3le").write_text(text)
    meta = {
        "timestamp": REFERENCE.isoformat().replace("+00:00", "Z"),
        "records": PLANES * PER_PLANE,
        "synthetic": True,
        "description": "Generated Starlink-like shell segment (53 deg, 550 km); see scripts/make_starlink_fixture.py",
    }
    (OUT / "starlink_fixture.json").write_text(json.dumps(meta, indent=1) + "\n")
    print(f"wrote {PLANES * PER_PLANE} records to {OUT}")


if __name__ == "__main__":
    main()
