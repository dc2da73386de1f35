"""Stochastic shift-reduce parsers over binarized trees.

A parse is a sequence of moves (shift, reduce-one, reduce-two) mapping the
empty stack to [start-symbol, *].  The joint model conditions each move on
the top two stack labels; the conditional model additionally conditions on
the look-ahead symbol and may only shift that symbol.  Both enforce the
structural zeros that keep every move applicable, by masking the estimated
distribution to the allowed move set and renormalizing.
"""

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import NamedTuple

from .interp import CondTable, InterpolatedCondDist, fit_interpolation
from .trees import Tree, debinarize

STAR = "*"

SHIFT = "shift"
REDUCE1 = "reduce1"
REDUCE2 = "reduce2"


class ParserError(ValueError):
    pass


class Move(NamedTuple):
    kind: str
    label: str


def shift(w):
    return Move(SHIFT, w)


def reduce1(c):
    return Move(REDUCE1, c)


def reduce2(c):
    return Move(REDUCE2, c)


def stack_top2(stack):
    """(s1, s2): top and next-to-top labels, STAR when absent."""
    s1 = stack[-1] if len(stack) >= 1 else STAR
    s2 = stack[-2] if len(stack) >= 2 else STAR
    return s1, s2


def apply_move(stack, move):
    """Moves are partial functions from stacks to stacks (label tuples)."""
    if move.kind == SHIFT:
        return stack + (move.label,)
    if move.kind == REDUCE1:
        if len(stack) < 1:
            raise ParserError("reduce1 on an empty stack")
        return stack[:-1] + (move.label,)
    if move.kind == REDUCE2:
        if len(stack) < 2:
            raise ParserError("reduce2 needs two stack elements")
        return stack[:-2] + (move.label,)
    raise ParserError("unknown move kind %r" % (move.kind,))


def oracle_moves(t):
    """The move sequence whose replay from the empty stack rebuilds t.

    Requires a binarized tree (every internal node unary or binary); ends
    with the accepting shift of STAR.
    """
    out = []

    def walk(node):
        if node.is_leaf():
            out.append(shift(node.label))
        elif len(node.children) == 1:
            walk(node.children[0])
            out.append(reduce1(node.label))
        elif len(node.children) == 2:
            walk(node.children[0])
            walk(node.children[1])
            out.append(reduce2(node.label))
        else:
            raise ParserError(
                "node %r has %d children; binarize first"
                % (node.label, len(node.children)))

    walk(t)
    out.append(shift(STAR))
    return out


def tree_from_moves(moves):
    """Replay a complete move sequence back into a tree."""
    stack = []  # Tree nodes
    for move in moves:
        if move.kind == SHIFT:
            stack.append(Tree(move.label))
        elif move.kind == REDUCE1:
            if not stack:
                raise ParserError("reduce1 on an empty stack")
            stack.append(Tree(move.label, (stack.pop(),)))
        else:
            if len(stack) < 2:
                raise ParserError("reduce2 needs two stack elements")
            right = stack.pop()
            left = stack.pop()
            stack.append(Tree(move.label, (left, right)))
    if len(stack) != 2 or stack[1].label != STAR:
        raise ParserError("move sequence is not a complete parse")
    return stack[0]


@dataclass
class BeamConfig:
    threshold: float = 1e-6          # ratio against the best same-prefix state
    require_observed_pairs: bool = True
    max_states: int = 10000          # out-of-memory guard per prefix class

    def __post_init__(self):
        if not 0 < self.threshold <= 1:
            raise ValueError("threshold must be in (0, 1]")


class MoveModel:
    """Move distribution with structural zeros, joint or conditional."""

    def __init__(self, flavor, start, joint_table, terminals, nonterminals,
                 observed_pairs, cond_mixture=None):
        if flavor not in ("joint", "conditional"):
            raise ValueError("flavor must be 'joint' or 'conditional'")
        if flavor == "conditional" and cond_mixture is None:
            raise ValueError("conditional flavor needs its mixture")
        self.flavor = flavor
        self.start = start
        self.joint_table = joint_table          # P(m | s1, s2)
        self.cond_mixture = cond_mixture        # mixes P(m|s1,s2,w), P(m|s1,s2)
        self.terminals = frozenset(terminals)
        self.nonterminals = frozenset(nonterminals)
        self.observed_pairs = frozenset(observed_pairs)

    def allowed(self, move, s1, s2, lookahead=None):
        """Structural constraints: moves must be applicable and the accept
        shift only fires on the final [start] stack; the conditional model
        may only shift its look-ahead symbol."""
        if move.kind == REDUCE1:
            return s1 != STAR
        if move.kind == REDUCE2:
            return s2 != STAR
        if move.label == STAR:
            return s1 == self.start and s2 == STAR
        if self.flavor == "conditional":
            return move.label == lookahead
        return True

    def _raw(self, move, s1, s2, lookahead):
        if self.flavor == "joint":
            return self.joint_table.prob((s1, s2), move)
        return self.cond_mixture.prob((s1, s2, lookahead), move)

    def move_probs(self, s1, s2, lookahead=None):
        """Distribution over allowed moves in this context (renormalized
        after masking; empty dict for a dead context)."""
        if self.flavor == "conditional" and lookahead is None:
            raise ParserError("conditional model needs a look-ahead symbol")
        if self.flavor == "joint":
            candidates = self.joint_table.dist((s1, s2))
        else:
            candidates = self.cond_mixture.dist((s1, s2, lookahead))
        masked = {m: p for m, p in candidates.items()
                  if p > 0.0 and self.allowed(m, s1, s2, lookahead)}
        total = sum(masked.values())
        if total <= 0.0:
            return {}
        return {m: p / total for m, p in masked.items()}

    def prob(self, move, s1, s2, lookahead=None):
        return self.move_probs(s1, s2, lookahead).get(move, 0.0)


def _replay_events(t):
    """(s1, s2, lookahead, move) events along a tree's oracle replay."""
    from .trees import tree_yield
    moves = oracle_moves(t)
    sentence = tree_yield(t) + [STAR]
    stack = ()
    shifted = 0
    events = []
    for move in moves:
        s1, s2 = stack_top2(stack)
        lookahead = sentence[shifted]
        events.append((s1, s2, lookahead, move))
        if move.kind == SHIFT:
            shifted += 1
        stack = apply_move(stack, move)
    return events


def _symbol_sets(trees):
    terminals = set()
    nonterminals = set()
    for t in trees:
        stack = [t]
        while stack:
            node = stack.pop()
            if node.is_leaf():
                terminals.add(node.label)
            else:
                nonterminals.add(node.label)
                stack.extend(node.children)
    return terminals, nonterminals


def estimate_joint(train):
    """Relative-frequency move model P(m | s1, s2) from binarized trees."""
    trees = list(train)
    if not trees:
        raise ParserError("empty training corpus")
    table = CondTable()
    observed = set()
    for t in trees:
        for s1, s2, _la, move in _replay_events(t):
            table.add((s1, s2), move)
            observed.add((s1, s2))
    terminals, nonterminals = _symbol_sets(trees)
    return MoveModel("joint", trees[0].label, table, terminals, nonterminals,
                     observed)


def estimate_conditional(train, heldout, max_iters=100, tol=1e-7):
    """Conditional move model: bucketed mixture of P(m|s1,s2,w) and
    P(m|s1,s2), weights fitted on heldout trees."""
    trees = list(train)
    held = list(heldout)
    if not trees or not held:
        raise ParserError("empty training or heldout corpus")
    full = CondTable()
    coarse = CondTable()
    observed = set()
    for t in trees:
        for s1, s2, la, move in _replay_events(t):
            full.add((s1, s2, la), move)
            coarse.add((s1, s2), move)
            observed.add((s1, s2))
    # finest component last: bucketing keys off the (s1, s2, w) count
    components = [(coarse, (0, 1)), (full, (0, 1, 2))]
    events = []
    for t in held:
        for s1, s2, la, move in _replay_events(t):
            events.append(((s1, s2, la), move))
    mixture = fit_interpolation(components, events,
                                max_iters=max_iters, tol=tol)
    terminals, nonterminals = _symbol_sets(trees)
    return MoveModel("conditional", trees[0].label, coarse, terminals,
                     nonterminals, observed, cond_mixture=mixture)


def parse_log_prob(model, moves, words):
    """Log probability of a complete move sequence for ``words``."""
    sentence = list(words) + [STAR]
    stack = ()
    shifted = 0
    lp = 0.0
    for move in moves:
        s1, s2 = stack_top2(stack)
        lookahead = sentence[shifted] if shifted < len(sentence) else None
        if move.kind == SHIFT:
            if shifted >= len(sentence) or move.label != sentence[shifted]:
                raise ParserError(
                    "shift %r does not match input at position %d"
                    % (move.label, shifted))
            shifted += 1
        p = model.prob(move, s1, s2, lookahead)
        if p <= 0.0:
            return float("-inf")
        lp += math.log(p)
        stack = apply_move(stack, move)
    if shifted != len(sentence):
        raise ParserError("move sequence did not consume the input")
    return lp


# ---------------------------------------------------------------------------
# Beam search, synchronized on the number of words shifted.

class _State(NamedTuple):
    logp: float
    moves: tuple
    labels: tuple   # stack labels, bottom to top
    trees: tuple    # Tree nodes, bottom to top


def _better(a, b):
    """Preference order: higher score, then lexicographically smaller moves."""
    if a.logp != b.logp:
        return a.logp > b.logp
    return a.moves < b.moves


def beam_parse(model, words, cfg=None):
    """Best-first beam parse; returns the highest-scoring complete parse
    (debinarize-ready) or None when the beam empties.

    States sharing a prefix length form one pruning class: a state scoring
    below threshold * best-in-class is dropped, as is (optionally) any state
    whose top two stack labels were never observed in training.
    """
    cfg = cfg or BeamConfig()
    words = list(words)
    if not words:
        raise ParserError("empty sentence")
    sentence = words + [STAR]
    log_thr = math.log(cfg.threshold)

    def keep(state):
        if not cfg.require_observed_pairs:
            return True
        return stack_top2(state.labels) in model.observed_pairs

    frontier = {(): _State(0.0, (), (), ())}
    best_complete = None
    for k in range(len(words) + 1):
        lookahead = sentence[k]
        # close the class under reduce moves
        pool = dict(frontier)
        best_logp = max((s.logp for s in pool.values()), default=float("-inf"))
        worklist = sorted(pool.values(), key=lambda s: (-s.logp, s.moves))
        while worklist:
            state = worklist.pop(0)
            if pool.get(state.labels) is not state:
                continue  # superseded
            probs = model.move_probs(*stack_top2(state.labels),
                                     lookahead=lookahead)
            for move in sorted(probs):
                if move.kind == SHIFT:
                    continue
                new = _apply_to_state(state, move, math.log(probs[move]))
                if new.logp < best_logp + log_thr or not keep(new):
                    continue
                cur = pool.get(new.labels)
                if cur is None or _better(new, cur):
                    pool[new.labels] = new
                    worklist.append(new)
                    best_logp = max(best_logp, new.logp)
        states = [s for s in pool.values() if s.logp >= best_logp + log_thr]
        if len(states) > cfg.max_states:
            states.sort(key=lambda s: (-s.logp, s.moves))
            states = states[:cfg.max_states]
        # shift the look-ahead (or accept with the final STAR shift)
        frontier = {}
        for state in states:
            s1, s2 = stack_top2(state.labels)
            probs = model.move_probs(s1, s2, lookahead=lookahead)
            move = shift(lookahead)
            p = probs.get(move, 0.0)
            if p <= 0.0:
                continue
            new = _apply_to_state(state, move, math.log(p))
            if lookahead == STAR:
                if best_complete is None or _better(new, best_complete):
                    best_complete = new
            elif keep(new):
                cur = frontier.get(new.labels)
                if cur is None or _better(new, cur):
                    frontier[new.labels] = new
        if not frontier and lookahead != STAR:
            return None
    if best_complete is None:
        return None
    return best_complete.trees[0]


def _apply_to_state(state, move, logp):
    if move.kind == SHIFT:
        labels = state.labels + (move.label,)
        trees = state.trees + (Tree(move.label),)
    elif move.kind == REDUCE1:
        labels = state.labels[:-1] + (move.label,)
        trees = state.trees[:-1] + (Tree(move.label, (state.trees[-1],)),)
    else:
        labels = state.labels[:-2] + (move.label,)
        trees = state.trees[:-2] + (
            Tree(move.label, (state.trees[-2], state.trees[-1])),)
    return _State(state.logp + logp, state.moves + (move,), labels, trees)


def parse_corpus(model, sentences, cfg=None):
    """Beam-parse each sentence and debinarize; returns (trees, failures)
    where a failed sentence contributes None."""
    cfg = cfg or BeamConfig()
    out = []
    failures = 0
    for words in sentences:
        t = beam_parse(model, words, cfg)
        if t is None:
            failures += 1
            out.append(None)
        else:
            out.append(debinarize(t))
    return out, failures


# ---------------------------------------------------------------------------
# Persistence.

def _write_move(move):
    return "%s %s" % (move.kind, move.label)


def _read_move(text):
    kind, label = text.split(" ", 1)
    return Move(kind, label)


def save_sr(model, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write("[meta]\nflavor\t%s\nstart\t%s\n" % (model.flavor, model.start))
        f.write("[terminals]\n")
        for s in sorted(model.terminals):
            f.write("%s\n" % s)
        f.write("[nonterminals]\n")
        for s in sorted(model.nonterminals):
            f.write("%s\n" % s)
        f.write("[observed_pairs]\n")
        for s1, s2 in sorted(model.observed_pairs):
            f.write("%s %s\n" % (s1, s2))
        f.write("[joint]\n")
        for ctx, move, c in sorted(model.joint_table.items()):
            f.write("%s\t%s\t%.17g\n" % (" ".join(ctx), _write_move(move), c))
        if model.cond_mixture is not None:
            full = model.cond_mixture.components[1][0]
            f.write("[full]\n")
            for ctx, move, c in sorted(full.items()):
                f.write("%s\t%s\t%.17g\n"
                        % (" ".join(ctx), _write_move(move), c))
            f.write("[lambdas]\n")
            for b in sorted(model.cond_mixture.lambdas):
                f.write("%d\t%s\n" % (b, " ".join(
                    "%.17g" % l for l in model.cond_mixture.lambdas[b])))


def load_sr(path):
    meta = {}
    terminals, nonterminals, observed = set(), set(), set()
    joint = CondTable()
    full = CondTable()
    lambdas = {}
    has_cond = False
    section = None
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("["):
                section = line.strip("[]")
                if section in ("full", "lambdas"):
                    has_cond = True
                continue
            if section == "meta":
                k, v = line.split("\t")
                meta[k] = v
            elif section == "terminals":
                terminals.add(line)
            elif section == "nonterminals":
                nonterminals.add(line)
            elif section == "observed_pairs":
                observed.add(tuple(line.split(" ")))
            elif section in ("joint", "full"):
                ctx, mv, c = line.split("\t")
                table = joint if section == "joint" else full
                table.add(tuple(ctx.split(" ")), _read_move(mv), float(c))
            elif section == "lambdas":
                b, ls = line.split("\t")
                lambdas[int(b)] = tuple(float(x) for x in ls.split())
    mixture = None
    if has_cond:
        mixture = InterpolatedCondDist(
            [(joint, (0, 1)), (full, (0, 1, 2))], lambdas)
    return MoveModel(meta["flavor"], meta["start"], joint, terminals,
                     nonterminals, observed, cond_mixture=mixture)
