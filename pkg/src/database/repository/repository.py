import sqlite3
import json
import math
from datetime import datetime
from pathlib import Path
from typing import List, Optional, Union
from contextlib import contextmanager

from ..models.CampaignRecord import CampaignRecord
from ...experiment import EnergyStats, Protocol, ScalingFit


class CampaignRepository:
    """Database operations for recorded campaigns."""

    def __init__(self, db_path: Union[str, Path] = "results/campaigns.db"):
        self.db_path = Path(db_path)
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        self._init_database()

    @contextmanager
    def _get_connection(self):
        """Context manager for safe database connection."""
        conn = sqlite3.connect(str(self.db_path))
        conn.row_factory = sqlite3.Row # Access columns by name
        conn.execute("PRAGMA foreign_keys = ON")
        try:
            yield conn
            conn.commit()
        except Exception as e:
            conn.rollback()
            raise e
        finally:
            conn.close()

    def _init_database(self):
        """Create tables if they don't exist."""
        with self._get_connection() as conn:
            cursor = conn.cursor()

            # Campaigns table
            cursor.execute("""
            CREATE TABLE IF NOT EXISTS campaigns (
                id TEXT PRIMARY KEY,
                label TEXT,
                protocol TEXT NOT NULL,
                sizes TEXT NOT NULL,
                lambdas TEXT NOT NULL,
                nreal INTEGER NOT NULL,
                master_seed TEXT NOT NULL,
                cell_count INTEGER DEFAULT 0,
                warning_count INTEGER DEFAULT 0,
                manifest TEXT,
                created_at TEXT
                )
            """)

            # Cells table, one row per (n, lambda)
            cursor.execute("""
            CREATE TABLE IF NOT EXISTS cells (
                campaign_id TEXT NOT NULL REFERENCES campaigns(id) ON DELETE CASCADE,
                position INTEGER NOT NULL,
                protocol TEXT NOT NULL,
                n INTEGER NOT NULL,
                lambda REAL NOT NULL,
                nreal INTEGER NOT NULL,
                starts_or_budget INTEGER NOT NULL,
                runs INTEGER NOT NULL,
                tau REAL,
                tau_stderr REAL,
                h_n REAL,
                h_n_stderr REAL,
                truncated_runs INTEGER DEFAULT 0,
                flagged_realizations INTEGER DEFAULT 0,
                total_flips INTEGER DEFAULT 0,
                PRIMARY KEY (campaign_id, position)
                )
            """)

            # Scaling fits table
            cursor.execute("""
            CREATE TABLE IF NOT EXISTS fits (
                campaign_id TEXT NOT NULL REFERENCES campaigns(id) ON DELETE CASCADE,
                position INTEGER NOT NULL,
                lambda REAL NOT NULL,
                exponent REAL NOT NULL,
                prefactor REAL NOT NULL,
                r_squared REAL NOT NULL,
                sizes_used TEXT,
                sizes_excluded TEXT,
                PRIMARY KEY (campaign_id, position)
                )
            """)

    # CAMPAIGN OPERATIONS

    def save_campaign(
        self,
        manifest: dict,
        stats: List[EnergyStats],
        fits: List[ScalingFit],
        label: str = "",
    ) -> CampaignRecord:
        """Store a finished campaign with all its cells and fits."""
        record = CampaignRecord.from_manifest(manifest, cell_count=len(stats), label=label)
        with self._get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute("""
            INSERT INTO campaigns
            (id, label, protocol, sizes, lambdas, nreal, master_seed, cell_count, warning_count, manifest, created_at)
            VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
            """, (
                record.id,
                record.label,
                record.protocol,
                json.dumps(record.sizes),
                json.dumps(record.lambdas),
                record.nreal,
                # sqlite integers are signed 64-bit
                str(record.master_seed),
                record.cell_count,
                record.warning_count,
                json.dumps(record.manifest),
                record.created_at.isoformat(),
            ))

            cursor.executemany("""
            INSERT INTO cells
            (campaign_id, position, protocol, n, lambda, nreal, starts_or_budget, runs,
             tau, tau_stderr, h_n, h_n_stderr, truncated_runs, flagged_realizations, total_flips)
            VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
            """, [
                (
                    record.id, i, Protocol(s.protocol).value, s.n, s.lam, s.nreal, s.starts_or_budget, s.runs,
                    _finite(s.tau), _finite(s.tau_stderr), s.h_n, s.h_n_stderr,
                    s.truncated_runs, s.flagged_realizations, s.total_flips,
                )
                for i, s in enumerate(stats)
            ])

            cursor.executemany("""
            INSERT INTO fits
            (campaign_id, position, lambda, exponent, prefactor, r_squared, sizes_used, sizes_excluded)
            VALUES (?, ?, ?, ?, ?, ?, ?, ?)
            """, [
                (
                    record.id, i, f.lam, f.exponent, f.prefactor, f.r_squared,
                    json.dumps(f.sizes_used), json.dumps(f.sizes_excluded),
                )
                for i, f in enumerate(fits)
            ])
        return record

    def list_campaigns(self) -> List[CampaignRecord]:
        """All recorded campaigns, newest first."""
        with self._get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute("SELECT * FROM campaigns ORDER BY created_at DESC")
            return [self._row_to_campaign(row) for row in cursor.fetchall()]

    def get_campaign(self, campaign_id: str) -> Optional[CampaignRecord]:
        """Get a single campaign by ID or unique ID prefix."""
        with self._get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute("SELECT * FROM campaigns WHERE id LIKE ?", (f"{campaign_id}%",))
            rows = cursor.fetchall()
            if len(rows) == 1:
                return self._row_to_campaign(rows[0])
            return None

    def get_cells(self, campaign_id: str) -> List[EnergyStats]:
        """Cells of a campaign in their original order."""
        with self._get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute(
                "SELECT * FROM cells WHERE campaign_id = ? ORDER BY position ASC",
                (campaign_id,)
            )
            return [self._row_to_cell(row) for row in cursor.fetchall()]

    def get_fits(self, campaign_id: str) -> List[ScalingFit]:
        """Scaling fits of a campaign in their original order."""
        with self._get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute(
                "SELECT * FROM fits WHERE campaign_id = ? ORDER BY position ASC",
                (campaign_id,)
            )
            return [self._row_to_fit(row) for row in cursor.fetchall()]

    def delete_campaign(self, campaign_id: str) -> bool:
        """Delete a campaign and everything recorded with it."""
        with self._get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute("DELETE FROM campaigns WHERE id = ?", (campaign_id,))
            return cursor.rowcount > 0

    def _row_to_campaign(self, row) -> CampaignRecord:
        """Convert a database row to a CampaignRecord object."""
        return CampaignRecord(
            id=row["id"],
            label=row["label"] if row["label"] else "",
            protocol=row["protocol"],
            sizes=json.loads(row["sizes"]),
            lambdas=json.loads(row["lambdas"]),
            nreal=row["nreal"],
            master_seed=int(row["master_seed"]),
            cell_count=row["cell_count"],
            warning_count=row["warning_count"],
            manifest=json.loads(row["manifest"]) if row["manifest"] else {},
            created_at=datetime.fromisoformat(row["created_at"]) if row["created_at"] else datetime.now(),
        )

    def _row_to_cell(self, row) -> EnergyStats:
        """Convert a database row to an EnergyStats object."""
        return EnergyStats(
            protocol=Protocol(row["protocol"]),
            n=row["n"],
            lam=row["lambda"],
            nreal=row["nreal"],
            starts_or_budget=row["starts_or_budget"],
            runs=row["runs"],
            tau=row["tau"] if row["tau"] is not None else math.nan,
            tau_stderr=row["tau_stderr"] if row["tau_stderr"] is not None else math.nan,
            h_n=row["h_n"],
            h_n_stderr=row["h_n_stderr"],
            truncated_runs=row["truncated_runs"],
            flagged_realizations=row["flagged_realizations"],
            total_flips=row["total_flips"],
        )

    def _row_to_fit(self, row) -> ScalingFit:
        """Convert a database row to a ScalingFit object."""
        return ScalingFit(
            lam=row["lambda"],
            exponent=row["exponent"],
            prefactor=row["prefactor"],
            r_squared=row["r_squared"],
            sizes_used=json.loads(row["sizes_used"]) if row["sizes_used"] else [],
            sizes_excluded=json.loads(row["sizes_excluded"]) if row["sizes_excluded"] else [],
        )


def _finite(value: float) -> Optional[float]:
    return value if value is not None and math.isfinite(value) else None
