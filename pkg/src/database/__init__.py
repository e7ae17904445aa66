"""Database module for recorded campaigns."""

from .models.CampaignRecord import CampaignRecord
from .repository.repository import CampaignRepository

__all__ = [
    "CampaignRecord",
    "CampaignRepository"
]
