import math

import pytest

from src.database import CampaignRecord, CampaignRepository
from src.experiment import ExperimentConfig, ScalingFit
from src.results_io import RunManifest


@pytest.fixture
def repo(tmp_path):
    return CampaignRepository(tmp_path / "db" / "campaigns.db")


@pytest.fixture
def manifest():
    config = ExperimentConfig(sizes=[25, 50], lambdas=[1.0, 100.0], nreal=10, master_seed=2**64 - 1)
    return RunManifest(config_echo=config).finish(["n=50 lambda=100: 1 runs hit the flip cap before converging"])


def test_save_and_list(repo, manifest, make_stats):
    record = repo.save_campaign(manifest.to_dict(), [make_stats(25, 1.0, -0.7)], [], label="first")

    campaigns = repo.list_campaigns()
    assert [c.id for c in campaigns] == [record.id]
    stored = campaigns[0]
    assert stored.label == "first"
    assert stored.sizes == [25, 50]
    assert stored.lambdas == [1.0, 100.0]
    assert stored.master_seed == 2**64 - 1
    assert stored.cell_count == 1
    assert stored.warning_count == 1
    assert stored.manifest["config_echo"]["nreal"] == 10


def test_cells_and_fits_keep_their_order(repo, manifest, make_stats):
    cells = [make_stats(50, 100.0, -0.72), make_stats(25, 1.0, None)]
    fits = [ScalingFit(lam=1.0, exponent=1.03, prefactor=0.8, r_squared=0.99, sizes_used=[25, 50], sizes_excluded=[])]
    record = repo.save_campaign(manifest.to_dict(), cells, fits)

    assert repo.get_cells(record.id) == cells
    assert repo.get_fits(record.id) == fits


def test_undefined_tau_is_stored_as_null(repo, manifest, make_stats):
    cell = make_stats(25, 1.0, None, tau=math.nan)
    record = repo.save_campaign(manifest.to_dict(), [cell], [])
    assert math.isnan(repo.get_cells(record.id)[0].tau)


def test_lookup_by_prefix(repo, manifest, make_stats):
    record = repo.save_campaign(manifest.to_dict(), [make_stats(25, 1.0, -0.7)], [])
    assert repo.get_campaign(record.id[:8]).id == record.id
    assert repo.get_campaign("zzzz") is None


def test_delete_cascades(repo, manifest, make_stats):
    record = repo.save_campaign(manifest.to_dict(), [make_stats(25, 1.0, -0.7)], [])
    assert repo.delete_campaign(record.id)
    assert repo.list_campaigns() == []
    assert repo.get_cells(record.id) == []
    assert not repo.delete_campaign(record.id)


def test_record_from_manifest_describes_the_grid(manifest):
    record = CampaignRecord.from_manifest(manifest.to_dict(), cell_count=4)
    assert record.describe() == "fixed-starts N=[25,50] lambda=[1,100] nreal=10 (1 warnings)"
    assert CampaignRecord.from_dict(record.to_dict()).id == record.id
