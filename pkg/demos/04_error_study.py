# Fixed- versus floating-point error on random call-pricing systems.
# 500 samples keeps this quick; the CLI runs the full 5000.
import numpy as np

from thomascore.experiment import ExperimentConfig, run_experiment

res = run_experiment(ExperimentConfig(samples=500, seed=1), out_dir="error_study")
for key, s in res.summaries.items():
    worst = np.max(s.max_error_node[1:] / s.envelope[1:])
    print(f"{key}: max error {s.max_error:.3e}, expected rounding {s.expected_rounding_error:.3e}, "
          f"mean within envelope {np.all(s.mean_error <= s.envelope)}, worst max/envelope {worst:.2f}")
print("range conditions met:", res.range_counts)

# error grows with S like the payoff does
s = res.summaries["[2,30]"]
print("corr(S, mean error) =", round(float(np.corrcoef(s.S, s.mean_error)[0, 1]), 3))

# same study with inputs quantised straight from double precision
res64 = run_experiment(ExperimentConfig(samples=500, seed=1, input_precision="float64"))
for key, s in res64.summaries.items():
    print(f"{key} (float64 inputs): max error {s.max_error:.3e}")
