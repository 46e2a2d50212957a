"""Client data partitioning across areas.

Three schemes:

* ``iid_clients``: one global shuffle dealt equally to every client.
* ``iid_clusters``: areas draw from all labels, but each client inside an
  area concentrates on a small label support (about ``labels_per_cluster``
  labels), so clients are non-IID while areas stay IID.
* ``noniid_clusters``: each area's union support is exactly
  ``labels_per_cluster`` labels and every client holds exactly
  ``labels_per_client`` of them.

All dealing is deterministic given the partition seed.  Sample counts per
client are equal within one sample; under ``noniid_clusters`` they are
exactly equal (leftover samples stay unassigned rather than skewing a
client).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidConfigError
from ..rng import substream
from .data import Dataset

_SCHEMES = ("iid_clients", "iid_clusters", "noniid_clusters")


@dataclass(frozen=True)
class PartitionSpec:
    scheme: str
    M: int
    clients_per_area: tuple[int, ...]
    labels_per_cluster: int = 3
    labels_per_client: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in _SCHEMES:
            raise InvalidConfigError(f"unknown partition scheme {self.scheme!r}")
        counts = tuple(int(c) for c in self.clients_per_area)
        object.__setattr__(self, "clients_per_area", counts)
        if self.M < 1:
            raise InvalidConfigError("M must be >= 1")
        if len(counts) != self.M:
            raise InvalidConfigError("clients_per_area must have M entries")
        if any(c < 1 for c in counts):
            raise InvalidConfigError("every area needs at least one client")
        if self.labels_per_cluster < 1 or self.labels_per_client < 1:
            raise InvalidConfigError("label counts must be >= 1")
        if self.labels_per_client > self.labels_per_cluster:
            raise InvalidConfigError("labels_per_client may not exceed labels_per_cluster")

    @property
    def total_clients(self) -> int:
        return sum(self.clients_per_area)


def partition(dataset: Dataset, spec: PartitionSpec) -> list[list[Dataset]]:
    """Split ``dataset`` into per-area, per-client datasets."""
    if spec.total_clients == 1:
        # one client owns everything, whatever the scheme
        return [[dataset]]
    if spec.total_clients > dataset.n:
        raise InvalidConfigError(
            f"{spec.total_clients} clients cannot share {dataset.n} samples"
        )
    rng = substream(spec.seed, "partition")
    if spec.scheme == "iid_clients":
        return _deal_iid(dataset, spec, rng)
    if spec.scheme == "iid_clusters":
        return _deal_iid_clusters(dataset, spec, rng)
    return _deal_noniid_clusters(dataset, spec, rng)


def _quotas(total: int, num_clients: int) -> list[int]:
    base, rem = divmod(total, num_clients)
    return [base + (1 if i < rem else 0) for i in range(num_clients)]


def _deal_iid(dataset: Dataset, spec: PartitionSpec, rng) -> list[list[Dataset]]:
    order = rng.permutation(dataset.n)
    quotas = _quotas(dataset.n, spec.total_clients)
    out: list[list[Dataset]] = []
    cursor = 0
    q = iter(quotas)
    for count in spec.clients_per_area:
        area = []
        for _ in range(count):
            take = next(q)
            area.append(dataset.subset(np.sort(order[cursor : cursor + take])))
            cursor += take
        out.append(area)
    return out


def _deal_iid_clusters(dataset: Dataset, spec: PartitionSpec, rng) -> list[list[Dataset]]:
    """Areas get IID shares; clients inside an area focus on few labels."""
    order = rng.permutation(dataset.n)
    client_quotas = _quotas(dataset.n, spec.total_clients)
    out: list[list[Dataset]] = []
    cursor = 0
    qi = 0
    for count in spec.clients_per_area:
        share = sum(client_quotas[qi : qi + count])
        area_idx = order[cursor : cursor + share]
        cursor += share
        out.append(_concentrate_labels(dataset, area_idx, client_quotas[qi : qi + count], spec, rng))
        qi += count
    return out


def _concentrate_labels(dataset, area_idx, quotas, spec, rng) -> list[Dataset]:
    """Deal an area's pool so each client leans on ~labels_per_cluster labels.

    Supports are best-effort: when a support label's pool dries up the
    client borrows from whatever labels remain, keeping counts exact.
    """
    labels = dataset.labels[area_idx]
    present = np.unique(labels)
    deck = rng.permutation(present)
    support_size = min(spec.labels_per_cluster, deck.size)
    pools = {int(l): list(area_idx[labels == l]) for l in present}
    clients: list[Dataset] = []
    for c, quota in enumerate(quotas):
        start = (c * support_size) % deck.size
        support = [int(deck[(start + j) % deck.size]) for j in range(support_size)]
        chosen: list[int] = []
        for pass_j in range(quota):
            picked = False
            for probe in range(support_size):
                cand = support[(pass_j + probe) % support_size]
                if pools[cand]:
                    chosen.append(pools[cand].pop())
                    picked = True
                    break
            if not picked:
                # support dried up; borrow so counts stay exact
                for lab2 in sorted(pools):
                    if pools[lab2]:
                        chosen.append(pools[lab2].pop())
                        picked = True
                        break
            if not picked:
                raise InvalidConfigError("area pool exhausted while dealing samples")
        clients.append(dataset.subset(np.sort(np.asarray(chosen))))
    return clients


def _deal_noniid_clusters(dataset: Dataset, spec: PartitionSpec, rng) -> list[list[Dataset]]:
    lpc, lpl = spec.labels_per_cluster, spec.labels_per_client
    if lpc > dataset.num_labels:
        raise InvalidConfigError(
            f"labels_per_cluster={lpc} exceeds num_labels={dataset.num_labels}"
        )
    for count in spec.clients_per_area:
        if count * lpl < lpc:
            raise InvalidConfigError(
                "too few clients to cover the cluster support "
                f"({count} clients x {lpl} labels < {lpc})"
            )

    deck = rng.permutation(dataset.num_labels)
    area_supports = [
        [int(deck[(i * lpc + j) % dataset.num_labels]) for j in range(lpc)]
        for i in range(spec.M)
    ]
    client_supports: list[list[list[int]]] = []
    for i, count in enumerate(spec.clients_per_area):
        sup = area_supports[i]
        client_supports.append(
            [[sup[(c * lpl + j) % lpc] for j in range(lpl)] for c in range(count)]
        )

    pools: dict[int, list[int]] = {}
    cursors: dict[int, int] = {}
    for lab in range(dataset.num_labels):
        idx = np.flatnonzero(dataset.labels == lab)
        pools[lab] = list(rng.permutation(idx))
        cursors[lab] = 0

    flat: list[list[int]] = []  # chosen sample ids per client, area-major
    flat_support: list[list[int]] = []
    for sup_area in client_supports:
        for sup in sup_area:
            flat.append([])
            flat_support.append(sup)

    def draw(lab: int) -> int | None:
        cur = cursors[lab]
        if cur >= len(pools[lab]):
            return None
        cursors[lab] = cur + 1
        return int(pools[lab][cur])

    # reservation: one sample per (client, support label) so supports are exact
    for chosen, sup in zip(flat, flat_support):
        for lab in sup:
            got = draw(lab)
            if got is None:
                raise InvalidConfigError(
                    f"label {lab} has too few samples to realize every client support"
                )
            chosen.append(got)

    # equal fill: whole passes only, so counts stay exactly equal
    spent = {c: lpl for c in range(len(flat))}
    while True:
        snapshot = dict(cursors)
        staged: list[int | None] = []
        for ci, sup in enumerate(flat_support):
            lab = sup[spent[ci] % lpl]
            got = draw(lab)
            if got is None:
                for probe in range(1, lpl):
                    got = draw(sup[(spent[ci] + probe) % lpl])
                    if got is not None:
                        break
            staged.append(got)
        if any(g is None for g in staged):
            cursors.update(snapshot)  # roll the partial pass back
            break
        for ci, got in enumerate(staged):
            flat[ci].append(got)
            spent[ci] += 1

    out: list[list[Dataset]] = []
    ci = 0
    for count in spec.clients_per_area:
        area = []
        for _ in range(count):
            area.append(dataset.subset(np.sort(np.asarray(flat[ci]))))
            ci += 1
        out.append(area)
    return out
