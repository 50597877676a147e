"""
Database configuration and session management.

Provides the SQLAlchemy declarative base plus a lazily created engine and
session factory for the selection-history database. History recording is
disabled while ``RESULTS_DB_URL`` is empty.
"""

import os
from contextlib import contextmanager
from functools import lru_cache
from typing import Iterator, Optional

from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import Session, declarative_base, sessionmaker

from app.config.settings import get_settings
from app.core.errors import ConfigurationError


# Declarative base for ORM models
Base = declarative_base()


def resolve_url(url: Optional[str] = None) -> str:
    """
    Database URL to use: the argument, else ``RESULTS_DB_URL``.

    Raises:
        ConfigurationError: neither is set
    """
    url = url or get_settings().RESULTS_DB_URL
    if not url:
        raise ConfigurationError("no results database configured", "RESULTS_DB_URL")
    return url


@lru_cache(maxsize=None)
def get_engine(url: str) -> Engine:
    """One engine per URL for the life of the process."""
    return create_engine(url, future=True, echo=False)


def init_db(url: Optional[str] = None) -> Engine:
    """
    Create the history tables if they don't exist.

    Idempotent; creates the parent directory of a SQLite file.
    """
    # Import models to register them with Base.metadata
    from app.infrastructure.db import models  # noqa: F401

    url = resolve_url(url)
    if url.startswith("sqlite:///"):
        db_dir = os.path.dirname(url.replace("sqlite:///", ""))
        if db_dir:
            os.makedirs(db_dir, exist_ok=True)

    engine = get_engine(url)
    Base.metadata.create_all(bind=engine)
    return engine


@contextmanager
def session_scope(url: Optional[str] = None) -> Iterator[Session]:
    """
    Session on an initialized history database, closed on exit.

    Yields:
        Session: SQLAlchemy database session
    """
    engine = init_db(url)
    factory = sessionmaker(autocommit=False, autoflush=False, bind=engine, future=True)
    session = factory()
    try:
        yield session
    finally:
        session.close()
