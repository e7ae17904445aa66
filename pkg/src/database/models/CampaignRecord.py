"""
Stored campaign header: identity, provenance and a short description of
the grid it covered.
"""

from dataclasses import dataclass, field
from datetime import datetime
from typing import List
import uuid


@dataclass
class CampaignRecord:
    """One recorded campaign run."""

    # Required fields
    protocol: str
    sizes: List[int]
    lambdas: List[float]
    nreal: int
    master_seed: int

    ## auto-generated fields
    id: str = field(default_factory=lambda: str(uuid.uuid4()))
    label: str = ""
    cell_count: int = 0
    warning_count: int = 0
    manifest: dict = field(default_factory=dict)
    created_at: datetime = field(default_factory=datetime.now)

    def describe(self) -> str:
        """Human-readable one-line summary."""
        sizes = ",".join(str(n) for n in self.sizes)
        lambdas = ",".join(f"{lam:g}" for lam in self.lambdas)
        status = f"{self.warning_count} warnings" if self.warning_count else "clean"
        return f"{self.protocol} N=[{sizes}] lambda=[{lambdas}] nreal={self.nreal} ({status})"

    def to_dict(self) -> dict:
        """Convert CampaignRecord instance to dictionary."""
        return {
            "id": self.id,
            "label": self.label,
            "protocol": self.protocol,
            "sizes": self.sizes,
            "lambdas": self.lambdas,
            "nreal": self.nreal,
            "master_seed": self.master_seed,
            "cell_count": self.cell_count,
            "warning_count": self.warning_count,
            "manifest": self.manifest,
            "created_at": self.created_at.isoformat(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CampaignRecord":
        """Create CampaignRecord from dictionary (when loading from DB)."""
        return cls(
            id=data.get("id", str(uuid.uuid4())),
            label=data.get("label", ""),
            protocol=data["protocol"],
            sizes=[int(n) for n in data["sizes"]],
            lambdas=[float(lam) for lam in data["lambdas"]],
            nreal=int(data["nreal"]),
            master_seed=int(data["master_seed"]),
            cell_count=int(data.get("cell_count", 0)),
            warning_count=int(data.get("warning_count", 0)),
            manifest=data.get("manifest", {}),
            created_at=datetime.fromisoformat(data.get("created_at", datetime.now().isoformat())),
        )

    @classmethod
    def from_manifest(cls, manifest: dict, cell_count: int, label: str = "") -> "CampaignRecord":
        """Build the header for a campaign from its run manifest."""
        config = manifest["config_echo"]
        return cls(
            protocol=config["protocol"],
            sizes=list(config["sizes"]),
            lambdas=list(config["lambdas"]),
            nreal=int(config["nreal"]),
            master_seed=int(config["master_seed"]),
            label=label,
            cell_count=cell_count,
            warning_count=len(manifest.get("warnings", [])),
            manifest=manifest,
        )
