"""Deep repeated ConvLSTM planning agents.

A numpy-based library implementing:

- a minimal reverse-mode autodiff core (`autodiff`, `nn`, `optim`)
- the DRC(D, N) recurrent convolutional architecture (`drc`)
- procedural planning environments: Sokoban, Gridworld, Boxworld,
  MiniPacman (`envs`)
- the Boxoban level pipeline: generation, BFS solving, difficulty
  filtering, text I/O (`boxoban`)
- V-trace actor-critic training (`vtrace`, `train`) and evaluation
  protocols including the forced no-op "thinking steps" probe
  (`evaluate`)
"""

__version__ = "0.1.0"
