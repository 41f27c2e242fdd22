"""Single-sequence decoding strategies side by side on a known chain.

A hand-built Markov model makes the differences easy to read: greedy follows
the most likely path, beam search optimizes the joint sequence probability,
and temperature sampling trades accuracy for diversity.
"""

import numpy as np

from genrec import (
    apply_temperature,
    beam_search,
    greedy_decode,
    positional_list,
    temperature_sample,
    topk_filter,
    topk_prediction,
)
from genrec.decode import sequence_log_score
from genrec.model import TransitionTableModel

# a 8-item chain where each item has one strong and two weak successors
rng = np.random.default_rng(4)
m = np.zeros((9, 9))
for i in range(1, 9):
    succ = rng.choice(8, size=3, replace=False) + 1
    m[i, succ] = [0.6, 0.3, 0.1]
model = TransitionTableModel(m)
history = np.array([3, 5])
K = 4

print(f"history: {history.tolist()}  (banned from all outputs)\n")

recs = topk_prediction(model, history, K)
print(f"Top-K prediction   items {recs.items.tolist()}  "
      f"logit scores {np.round(recs.scores, 3).tolist()}")

greedy = greedy_decode(model, history, K)
print(f"greedy decoding    items {greedy.items}  "
      f"log-score {sequence_log_score(greedy):.3f}")

for width in (1, 3, 10):
    beam = beam_search(model, history, K, beam_width=width)
    print(f"beam search B={width:<3} items {beam.items}  "
          f"log-score {sequence_log_score(beam):.3f}")

print()
for temperature in (0.5, 1.0, 2.0):
    for seed in (0, 1):
        seq = temperature_sample(model, history, K, temperature,
                                 topk=5, rng=seed)
        print(f"sampling T={temperature:<4} seed={seed}  items {seq.items}")

# the positional reading turns a generated sequence into a ranked list
print(f"\npositional list of greedy: "
      f"{positional_list(greedy).items.tolist()} with relevances "
      f"{np.round(positional_list(greedy).scores, 3).tolist()}")

# score-vector operations used inside the samplers
sv = model.forward(history)
probs = apply_temperature(sv, 1.0)
print(f"\nnext-item distribution after history: "
      f"{np.round(probs.values, 3).tolist()}")
filtered = topk_filter(probs, 2)
print(f"after top-2 filtering and renormalization: "
      f"{np.round(filtered.values, 3).tolist()}")
