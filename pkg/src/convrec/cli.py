"""Console entry points for the gateway and the mock services."""

from __future__ import annotations

import argparse
import logging
import os

import uvicorn


def gateway_main(argv=None) -> None:
    parser = argparse.ArgumentParser(
        prog="convrec-gateway",
        description="Dialogue middleware over a REST recommender",
    )
    parser.add_argument("--config", default="config.json",
                        help="path to the JSON configuration file "
                             "(the IRF_CONFIG environment variable overrides this)")
    parser.add_argument("--port", type=int, default=8080)
    args = parser.parse_args(argv)

    from .gateway import CONFIG_ENV, create_app, load_config

    logging.basicConfig(level=logging.INFO)
    config_path = os.environ.get(CONFIG_ENV, args.config)
    app = create_app(load_config(config_path))
    uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="warning")


def mocks_main(argv=None) -> None:
    parser = argparse.ArgumentParser(
        prog="convrec-mocks",
        description="Mock recommender, user, and item services over a bundled corpus",
    )
    parser.add_argument("--port", type=int, default=8081)
    parser.add_argument("--corpus", default=None, help="corpus JSON path (bundled by default)")
    parser.add_argument("--score-scale", choices=["unit", "hundred"], default="unit",
                        help="report recommender scores raw or multiplied by 100")
    args = parser.parse_args(argv)

    from .mocks import MockBackend, create_mock_app, load_corpus

    logging.basicConfig(level=logging.INFO)
    items, users = load_corpus(args.corpus)
    app = create_mock_app(MockBackend(items, users, args.score_scale))
    uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="warning")
