"""Run logging.

Records the complete provenance of an experiment run as JSON lines:
- resolved configuration
- every trajectory record
- fits and output files
- warnings, errors and timing
"""

import uuid
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional

import jsonlines


class RunLogger:
    """Experiment run logger."""

    def __init__(self, log_dir: Path, run_id: Optional[str] = None, verbose: bool = False):
        """Initialize run logger.

        Args:
            log_dir: Directory for log files (.jsonl files)
            run_id: Run ID (auto-generated if None)
            verbose: Echo the log file location
        """
        self.log_dir = Path(log_dir)
        self.log_dir.mkdir(parents=True, exist_ok=True)

        self.run_id = run_id or str(uuid.uuid4())
        self.log_file = self.log_dir / f"{self.run_id}.jsonl"

        if verbose:
            print(f"📝 Logger initialized: {self.log_file}")

    def log_event(self, event_type: str, data: Dict[str, Any]):
        """Append one event to the JSONL file."""
        entry = {
            "run_id": self.run_id,
            "timestamp": datetime.now().strftime("%Y-%m-%d %H:%M:%S"),
            "event_type": event_type,
            "data": data,
        }
        with jsonlines.open(self.log_file, mode="a") as writer:
            writer.write(entry)

    def log_run_start(self, command: str, config: Dict[str, Any]):
        self.log_event("run_start", {"command": command, "config": config})

    def log_trajectory(self, index: int, record: Dict[str, Any]):
        self.log_event("trajectory", {"index": index, "record": record})

    def log_fit(self, name: str, fit: Dict[str, Any]):
        self.log_event("fit", {"name": name, "fit": fit})

    def log_output(self, path: Path):
        self.log_event("output", {"path": str(path)})

    def log_warning(self, message: str):
        self.log_event("warning", {"message": message})

    def log_error(self, error: BaseException):
        self.log_event(
            "error", {"error": type(error).__name__, "message": str(error)}
        )

    def log_run_complete(self, success: bool, elapsed: float):
        self.log_event("run_complete", {"success": success, "elapsed": elapsed})

    def read_logs(self) -> list:
        """Read all entries of this run."""
        if not self.log_file.exists():
            return []
        with jsonlines.open(self.log_file) as reader:
            return list(reader)

    def get_summary(self) -> Dict[str, Any]:
        """Summarize the run from its log entries."""
        logs = self.read_logs()

        if not logs:
            return {"error": "No logs found"}

        def first(event_type):
            return next((log for log in logs if log["event_type"] == event_type), None)

        run_start = first("run_start")
        run_complete = first("run_complete")

        return {
            "run_id": self.run_id,
            "command": run_start["data"]["command"] if run_start else "unknown",
            "trajectories": sum(1 for log in logs if log["event_type"] == "trajectory"),
            "fits": [log["data"]["name"] for log in logs if log["event_type"] == "fit"],
            "outputs": [
                log["data"]["path"] for log in logs if log["event_type"] == "output"
            ],
            "warnings": sum(1 for log in logs if log["event_type"] == "warning"),
            "success": run_complete["data"]["success"] if run_complete else False,
            "elapsed": run_complete["data"]["elapsed"] if run_complete else 0.0,
        }
