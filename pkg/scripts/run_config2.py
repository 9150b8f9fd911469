"""Random ADCOPs, 8 agents, domain 8, growing density."""

from common import ALGORITHMS, run

SPEC = {
    "family": "random_adcop",
    "params": {"agents": 8, "domain": 8, "max_cost": 100},
    "sweep": {"param": "density", "values": [0.25, 0.4, 0.55, 0.7, 0.85, 1.0]},
    "algorithms": ALGORITHMS,
    "instances": 50,
    "seed_base": 0,
    "timeout_s": 120.0,
}

if __name__ == "__main__":
    run("config2", SPEC)
