"""A short training run and the learning diagnostic.

Trains the actor-critic pair on a market where one asset drifts up one
percent a day. A positive regression slope of per-episode mean reward
against training step is the "is it learning" signal; the greedy policy's
weights show what was learned. A full-size run uses total_steps=300_000;
this demo stays small to finish in about a minute.
"""

import numpy as np

from drlfolio import EnvConfig, TrainConfig, train, training_slope
from drlfolio.ddpg import greedy_policy
from drlfolio.analytics import run_backtest
from drlfolio.synthetic import drift_market

market = drift_market(400, [0.01, 0.0, 0.0], sigma=0.0, seed=42)
env_config = EnvConfig(window=10, episode_len=60, mu=0.0)
train_config = TrainConfig(total_steps=4_000, seed=0)

print("training (4000 steps, buffer 600, batch 64, lr 5e-4 / 4e-5)...")
actor, critic, log = train(market, env_config, train_config)

slope, intercept = training_slope(log)
print(f"\nepisodes: {len(log.records)}")
print("episode mean rewards, first 3:",
      [f"{r.mean_daily_return:+.5f}" for r in log.records[:3]])
print("episode mean rewards, last 3 :",
      [f"{r.mean_daily_return:+.5f}" for r in log.records[-3:]])
print(f"regression slope: {slope:.3e}  ({'learning' if slope > 0 else 'not learning'})")

# What the greedy policy actually holds:
report = run_backtest(greedy_policy(actor), market, env_config, 30, 130)
print(f"\ngreedy backtest mean daily log return: {report.log_returns.mean():.5f}")
print("final weights (cash, drifter, flat, benchmark):",
      np.round(report.weights[-1], 3))
