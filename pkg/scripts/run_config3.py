"""Asymmetric MaxDCSPs, 10 agents, domain 10, density 0.4, growing tightness."""

from common import ALGORITHMS, run

SPEC = {
    "family": "max_dcsp",
    "params": {"agents": 10, "density": 0.4, "domain": 10},
    "sweep": {"param": "tightness", "values": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]},
    "algorithms": ALGORITHMS,
    "instances": 50,
    "seed_base": 0,
    "timeout_s": 120.0,
}

if __name__ == "__main__":
    run("config3", SPEC)
