import pandas as pd
import pytest

from causalbn import fixtures
from causalbn.data import preprocess


@pytest.fixture(scope="session")
def survey_csv(tmp_path_factory):
    """Full-size synthetic survey extract (253,680 rows), raw-encoded."""
    path = tmp_path_factory.mktemp("data") / "survey.csv"
    fixtures.generate_survey_csv(path, seed=2015)
    return path


@pytest.fixture(scope="session")
def survey_data(survey_csv):
    frame = pd.read_csv(survey_csv)
    return preprocess(frame, fixtures.default_variable_specs())


@pytest.fixture(scope="session")
def small_survey_data(survey_csv):
    frame = pd.read_csv(survey_csv).iloc[:10_000]
    return preprocess(frame, fixtures.default_variable_specs())


@pytest.fixture(scope="session")
def knowledge():
    return fixtures.load_knowledge_graph()
