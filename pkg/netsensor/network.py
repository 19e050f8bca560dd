######################################################################
# Copyright 2024 The netsensor Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
######################################################################

"""
Follow graph

Edges point from follower to followee, so the out-neighbours of a user
are its friends and the in-neighbours its followers.
"""
import logging
from dataclasses import dataclass
from typing import Iterable

import networkx as nx
import numpy as np

from netsensor.models import ArgumentError, DataValidationError, UndefinedStatisticError, UnknownUserError

logger = logging.getLogger("netsensor")


class SocialGraph:
    """Directed follow graph without self-loops or duplicate edges"""

    def __init__(self, edges: Iterable = (), nodes: Iterable = ()):
        graph = nx.DiGraph()
        graph.add_nodes_from(str(node) for node in nodes)
        graph.add_edges_from((str(follower), str(followee)) for follower, followee in edges)
        loops = list(nx.selfloop_edges(graph))
        if loops:
            logger.debug("Dropped %d self-loops", len(loops))
            graph.remove_edges_from(loops)
        self._graph = graph

    def __repr__(self):
        return f"<SocialGraph nodes={self.number_of_nodes()} edges={self.number_of_edges()}>"

    def __contains__(self, user_id):
        return user_id in self._graph

    def __len__(self):
        return self._graph.number_of_nodes()

    @property
    def nodes(self) -> set:
        """All user ids"""
        return set(self._graph.nodes)

    @property
    def edges(self) -> set:
        """All (follower, followee) pairs"""
        return set(self._graph.edges)

    @property
    def digraph(self) -> nx.DiGraph:
        """Read-only view of the underlying graph"""
        return self._graph.copy(as_view=True)

    def number_of_nodes(self) -> int:
        """Number of users"""
        return self._graph.number_of_nodes()

    def number_of_edges(self) -> int:
        """Number of follow edges"""
        return self._graph.number_of_edges()

    def friends(self, user_id: str) -> list:
        """Followees of a user in a stable order"""
        self._require(user_id)
        return sorted(self._graph.successors(user_id))

    def followers(self, user_id: str) -> list:
        """Followers of a user in a stable order"""
        self._require(user_id)
        return sorted(self._graph.predecessors(user_id))

    def out_degree(self, user_id: str) -> int:
        """Number of friends"""
        self._require(user_id)
        return self._graph.out_degree(user_id)

    def in_degree(self, user_id: str) -> int:
        """Number of followers"""
        self._require(user_id)
        return self._graph.in_degree(user_id)

    def degrees(self) -> dict:
        """user_id -> (in_degree, out_degree)"""
        return {
            node: (self._graph.in_degree(node), self._graph.out_degree(node))
            for node in self._graph.nodes
        }

    def bidirected(self) -> "SocialGraph":
        """Symmetric closure: every edge present in both directions"""
        edges = set(self._graph.edges)
        edges |= {(followee, follower) for follower, followee in edges}
        return SocialGraph(edges, self._graph.nodes)

    def _require(self, user_id: str) -> None:
        if user_id not in self._graph:
            raise UnknownUserError(f"Unknown user: {user_id}")

    ##################################################
    # FILE I/O
    ##################################################

    @classmethod
    def load(cls, path) -> "SocialGraph":
        """Reads a "follower followee" edge file; '#' starts a comment"""
        try:
            graph = nx.read_edgelist(path, create_using=nx.DiGraph, nodetype=str, data=False)
        except (TypeError, IndexError) as error:
            raise DataValidationError(f"Invalid edge file {path}: {error}") from error
        social = cls(graph.edges, graph.nodes)
        logger.info("Loaded graph with %d users and %d edges", len(social), social.number_of_edges())
        return social

    def write(self, path) -> None:
        """Writes the edge file sorted by (follower, followee)"""
        with open(path, "w", encoding="utf-8") as stream:
            for follower, followee in sorted(self._graph.edges):
                stream.write(f"{follower} {followee}\n")


def friends_of(g: SocialGraph, u: str) -> set:
    """The out-neighbours of u"""
    return set(g.friends(u))


@dataclass(frozen=True)
class ParadoxStats:
    """Mean degree of users against the mean degree of their friends"""

    mean_degree: float
    mean_friend_degree: float
    ratio: float

    def __iter__(self):
        return iter((self.mean_degree, self.mean_friend_degree, self.ratio))


def paradox_stats(g: SocialGraph, degree: str = "out") -> ParadoxStats:
    """Friendship-paradox statistics

    mean_degree averages the chosen degree over users; mean_friend_degree
    averages, over every edge u -> v, the chosen degree of v.
    """
    if degree not in ("out", "in"):
        raise ArgumentError(f"degree must be 'out' or 'in', got {degree!r}")
    n_edges = g.number_of_edges()
    if n_edges == 0:
        raise UndefinedStatisticError("Friendship paradox statistics are undefined on an edgeless graph")
    graph = g.digraph
    nodes = list(graph.nodes)
    ins = np.array([graph.in_degree(node) for node in nodes], dtype=float)
    outs = np.array([graph.out_degree(node) for node in nodes], dtype=float)
    chosen = outs if degree == "out" else ins
    mean_degree = float(chosen.mean())
    # each v is the target of in_degree(v) edges
    mean_friend_degree = float(np.dot(ins, chosen) / n_edges)
    return ParadoxStats(mean_degree, mean_friend_degree, mean_friend_degree / mean_degree)
