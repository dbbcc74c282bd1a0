import logging
from pathlib import Path

log = logging.getLogger(__name__)

# directory paths
DIR_DATA = Path(__file__).parent / "data"

# toy fixtures
PATH_RESEARCH = DIR_DATA / "research.csv"
PATH_PROJECTS = DIR_DATA / "projects.csv"
PATH_CONFIG = DIR_DATA / "config.json"
PATH_EXAMPLE_QUERY = DIR_DATA / "example_query.txt"

MAPPING_RESEARCH = {"id": "EID", "title": "Title", "abstract": "Abstract", "year": "Year"}
MAPPING_PROJECTS = {
    "id": "id",
    "title": "title",
    "abstract": "objective",
    "programme": "frameworkProgramme",
    "year": "startDate",
}
