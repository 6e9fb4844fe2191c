"""Generate the flagship catalog: one RQ 36 cross-section, 3 cars on a 3x3 grid, sunny.

    python3 scripts/run_flagship.py [OUT_DIR]

Writes ndjson, text, dot and HTML exports and prints the statistics report.
"""

import sys
import time

from sceneforge.pipeline import GenerationConfig, format_report, generate, write_outputs

FLAGSHIP = "RQ36[MedianBarrier,Lane^3,HardShoulder,CrashBarrier]"


def main(out: str = "out/flagship") -> None:
    config = GenerationConfig(
        layouts=(FLAGSHIP,),
        positions_per_lane=3,
        participants={"Car": 3},
        weather=("Sunny",),
        formats=("ndjson", "text", "dot", "html"),
        out=out,
    )
    start = time.perf_counter()
    result = generate(config)
    elapsed = time.perf_counter() - start
    write_outputs(result, out)
    print(format_report(result.report()))
    print(f"generation took {elapsed:.2f} s; output in {out}")


if __name__ == "__main__":
    main(*sys.argv[1:2])
