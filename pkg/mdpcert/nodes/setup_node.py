"""
Setup stage: builds the network, groups identical subsystems and prepares
per-group templates and grids. With a resume directory it reloads the
certificates of a previous run instead.
"""
import logging
from collections import OrderedDict
from typing import Dict, List, Sequence

import numpy as np

from mdpcert.abstraction.quantizer import Quantizer
from mdpcert.certification.certificate import read_certificates
from mdpcert.errors import ConfigurationError
from mdpcert.graph.state import PipelineState, SubsystemGroup
from mdpcert.nodes.base import StageNode
from mdpcert.scenario.templates import make_template
from mdpcert.systems.interfaces import BoxSet
from mdpcert.systems.loader import load_network
from mdpcert.systems.network import InterconnectionSpec
from mdpcert.utils.rng import derive_int_seed

logger = logging.getLogger(__name__)

CERTIFICATES_FILE = "certificates.json"


def build_quantizer(box: BoxSet, widths: Sequence[float], label: str) -> Quantizer:
    widths = np.asarray(widths, dtype=float)
    if widths.size not in (1, box.dim):
        raise ConfigurationError(f"{label}: {widths.size} cell widths for a {box.dim}-dimensional set")
    return Quantizer(box, np.broadcast_to(widths, (box.dim,)).copy())


def group_subsystems(net: InterconnectionSpec, seed: int, reuse: bool) -> List[SubsystemGroup]:
    """
    Partition subsystems by fingerprint.

    With `reuse`, identical subsystems share one group whose seed is derived
    from the fingerprint; otherwise every subsystem is its own group seeded
    by its index.
    """
    if not reuse:
        return [
            {"key": f"s{i}", "members": [i], "seed": derive_int_seed(seed, "subsystem", i)}
            for i in range(net.size)
        ]
    groups: "OrderedDict[str, SubsystemGroup]" = OrderedDict()
    for i, sub in enumerate(net.subsystems):
        fingerprint = sub.fingerprint()
        if fingerprint not in groups:
            groups[fingerprint] = {
                "key": f"g{len(groups)}",
                "members": [],
                "seed": derive_int_seed(seed, "subsystem", fingerprint),
            }
        groups[fingerprint]["members"].append(i)
    return list(groups.values())


class SetupNode(StageNode):
    """Loads the network and derives everything the later stages share."""

    NODE_NAME = "setup"

    def run(self, state: PipelineState) -> Dict:
        cfg = self.cfg
        net_cfg = cfg.resolve_network(self.ctx.base_dir)
        net = load_network(net_cfg, self.ctx.base_dir)
        groups = group_subsystems(net, cfg.seed, cfg.reuse_identical_subsystems)
        logger.info(f"Network with {net.size} subsystems in {len(groups)} distinct group(s)")

        templates, scenario_grids, abstraction_grids = {}, {}, {}
        grid = cfg.grid
        for group in groups:
            sub = net.subsystems[group["members"][0]]
            templates[group["key"]] = make_template({**cfg.template.model_dump(), "n": sub.n})
            qx = build_quantizer(sub.state_set, grid.state_widths, "state grid")
            qd = build_quantizer(sub.disturbance_set, grid.disturbance_widths, "disturbance grid")
            abstraction_grids[group["key"]] = (qx, qd)
            scenario_grids[group["key"]] = (
                build_quantizer(sub.state_set, grid.scenario_state_widths or grid.state_widths, "scenario state grid"),
                build_quantizer(
                    sub.disturbance_set,
                    grid.scenario_disturbance_widths or grid.disturbance_widths,
                    "scenario disturbance grid",
                ),
            )

        updates = {
            "network": net,
            "network_kind": net_cfg.kind,
            "groups": groups,
            "templates": templates,
            "scenario_grids": scenario_grids,
            "abstraction_grids": abstraction_grids,
            "resumed": False,
            "comparisons": state.get("comparisons", []),
        }

        if self.ctx.resume_dir is not None:
            path = self.ctx.resume_dir / CERTIFICATES_FILE
            if not path.exists():
                raise ConfigurationError(f"cannot resume: {path} does not exist")
            certificates = read_certificates(path)
            if len(certificates) != net.size:
                raise ConfigurationError(
                    f"cannot resume: {len(certificates)} certificates for {net.size} subsystems"
                )
            logger.info(f"Resuming from {path}: {len(certificates)} certificates reloaded")
            updates.update({"certificates": certificates, "resumed": True})
        return updates
