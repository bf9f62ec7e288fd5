# Games, Möbius coefficients and the order-2 interaction indices.
#
# Any set function over d players is a game. Here we build one from its Möbius
# coefficients, so the ground truth is known, and compare the indices.

# %%
import numpy as np

from metagame import (
    MobiusExpansion,
    MobiusGame,
    enumerate_game,
    fsii_via_mobius,
    mobius_transform,
    shapley_value_exact,
    stii_pairwise,
    two_shapley_via_mobius,
)

exp = MobiusExpansion.from_players(4, [
    ([0], 1.0),          # individual effect of player 0
    ([1, 2], 2.0),       # pure pair
    ([0, 1, 3], 3.0),    # a triple interaction
])
game = MobiusGame(exp)
table = enumerate_game(game)
print("dense table:", table)
print("recovered Möbius:", {k: round(v, 12) for k, v in mobius_transform(game).items()})

# %% Shapley value: every coefficient is shared equally among its members.
phi = shapley_value_exact(game).values
print("Shapley value:", phi)  # (2, 2, 1, 1)

# %% The three indices agree on singles and pure pairs but project the triple differently.
for index in (stii_pairwise(game), fsii_via_mobius(exp), two_shapley_via_mobius(exp)):
    print(f"{index.method:5s} singles {np.round(index.singles, 4)} pair(0,1) {index.pairs[0, 1]:.4f} "
          f"pair(1,2) {index.pairs[1, 2]:.4f}")
    # each one decomposes the Shapley value: singles + half the pair row sums
    assert np.allclose(index.decomposition(), phi)

# %% Estimators only need oracle calls, which the game counts.
print("oracle calls so far:", game.eval_count)
