from pathlib import Path
from setuptools import setup

here = Path(__file__).parent

setup(
    name="journalnet",
    version="0.1.0",
    description="Journal co-citation networks, centrality and classification audits",
    long_description=(here / "README.md").read_text(encoding="utf-8"),
    long_description_content_type="text/markdown",
    py_modules=[
        "journalnet_cli",
        "journalnet",
        "bib_ingest",
        "cocit_graph",
        "centrality",
        "class_rules",
        "audit",
        "formats_io",
        "errors",
        "log",
        "utils",
        "validate",
    ],
    install_requires=(here / "requirements.txt").read_text(encoding="utf-8").split(),
    extras_require={"test": ["pytest>=7", "networkx>=3.0"]},
    entry_points={
        "console_scripts": [
            "journalnet=journalnet_cli:main",
        ],
    },
    python_requires=">=3.10",
)
