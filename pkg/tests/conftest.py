"""Shared fixtures: a handwritten-digits CSV exported once per session."""

import pytest

from interpeff import export_digits_csv, load_digits_csv


@pytest.fixture(scope="session")
def digits_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "digits.csv"
    export_digits_csv(path)
    return path


@pytest.fixture(scope="session")
def digits(digits_csv):
    return load_digits_csv(digits_csv)
