"""Random ADCOPs, density 0.25, domain 3, growing agent count."""

from common import ALGORITHMS, run

SPEC = {
    "family": "random_adcop",
    "params": {"density": 0.25, "domain": 3, "max_cost": 100},
    "sweep": {"param": "agents", "values": list(range(8, 19, 2))},
    "algorithms": ALGORITHMS,
    "instances": 50,
    "seed_base": 0,
    "timeout_s": 120.0,
}

if __name__ == "__main__":
    run("config1", SPEC)
