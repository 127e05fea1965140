"""Tests for the logging helpers."""

import logging

import pytest

from common.logger import get_logger, set_level
from common.settings import settings


@pytest.fixture
def restore_level():
    previous = settings.log_level
    yield
    set_level(previous)


class TestSetLevel:
    """--verbose raises every project logger."""

    def test_project_loggers_follow(self, restore_level):
        ours = get_logger("numerics.level_check")
        foreign = logging.getLogger("thirdparty.level_check")
        foreign.setLevel(logging.ERROR)

        set_level("DEBUG")

        assert ours.level == logging.DEBUG
        assert foreign.level == logging.ERROR
        assert settings.log_level == "DEBUG"

    def test_new_loggers_use_the_new_level(self, restore_level):
        set_level("INFO")
        assert get_logger("cli.level_check").level == logging.INFO

    def test_single_handler(self):
        logger = get_logger("common.handler_check")
        assert len(get_logger("common.handler_check").handlers) == len(logger.handlers) == 1
