"""
Base runner class for experiment commands that write artifacts.
"""

import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np
from jinja2 import Environment, FileSystemLoader

from ..config import ExperimentConfig
from ..settings import Settings, get_settings

logger = logging.getLogger(__name__)


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def _csv_cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


class BaseRunner:
    """Base class for runners that execute one experiment and write its artifacts."""

    #: Subcommand name, used in the summary template context.
    command = "base"

    def __init__(
        self,
        config: ExperimentConfig,
        output_dir: Path,
        seed: int,
        settings: Optional[Settings] = None,
    ):
        """
        Initialize the runner.

        Args:
            config: Parsed experiment configuration
            output_dir: Directory artifacts are written to (created on demand)
            seed: Resolved seed for every random draw of the run
            settings: Environment settings (defaults to the process-wide ones)
        """
        self.config = config
        self.output_path = Path(output_dir)
        self.seed = seed
        self.settings = settings or get_settings()

        # Set up Jinja2 environment
        self.templates_dir = Path(__file__).parent.parent / "templates"
        self.jinja_env = Environment(
            loader=FileSystemLoader(str(self.templates_dir)),
            trim_blocks=True,
            lstrip_blocks=True,
            keep_trailing_newline=True,
        )
        self.jinja_env.filters["num"] = lambda v, spec=".4g": "n/a" if v is None else format(v, spec)

        self.context = self._build_context()

    def _build_context(self) -> Dict[str, Any]:
        """Build the template context. Override in subclasses."""
        return {
            "command": self.command,
            "seed": self.seed,
        }

    def render_template(self, template_path: str, context: Optional[Dict[str, Any]] = None) -> str:
        """
        Render a template with the given context.

        Args:
            template_path: Path to the template file relative to templates directory
            context: Additional context to merge with self.context

        Returns:
            Rendered template content
        """
        merged_context = {**self.context, **(context or {})}
        template = self.jinja_env.get_template(template_path)
        return template.render(**merged_context)

    def write_file(self, relative_path: str, content: str) -> Path:
        """
        Atomically write content to a file relative to the output path.

        The content goes to a temporary file in the target directory first and is
        then moved into place, so readers never see a partial artifact.
        """
        file_path = self.output_path / relative_path
        file_path.parent.mkdir(parents=True, exist_ok=True)

        fd, tmp_name = tempfile.mkstemp(dir=str(file_path.parent), prefix=f".{file_path.name}.")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                f.write(content)
            os.replace(tmp_name, file_path)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise

        print(f"📄 Created file: {relative_path}")
        return file_path

    def write_json(self, relative_path: str, data: Dict[str, Any]) -> Path:
        content = json.dumps(data, sort_keys=True, indent=2, default=_json_default)
        return self.write_file(relative_path, content + "\n")

    def write_csv(
        self, relative_path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]
    ) -> Path:
        """Write rows as CSV; floats use their shortest round-trip repr."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_csv_cell(v) for v in row])
        return self.write_file(relative_path, buffer.getvalue())

    def copy_template_file(
        self, template_path: str, output_path: str, context: Optional[Dict[str, Any]] = None
    ) -> Path:
        """
        Render a template file and write it to the output directory.

        Args:
            template_path: Path to template file (relative to templates directory)
            output_path: Output path (relative to output directory)
            context: Additional context for rendering
        """
        content = self.render_template(template_path, context)

        # Remove .j2 extension from output path if present
        if output_path.endswith(".j2"):
            output_path = output_path[:-3]

        return self.write_file(output_path, content)

    def generate(self) -> bool:
        """Run the experiment and write its artifacts; True when the run passes."""
        raise NotImplementedError
