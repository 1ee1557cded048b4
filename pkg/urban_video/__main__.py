from .cli import run

run()  # pragma: no cover
