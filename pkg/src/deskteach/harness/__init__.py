"""CLI, experiment protocols, dialogue service, and job tracking."""

from .alignment_run import AlignmentReport, run_alignment
from .config import ExperimentConfig
from .continual import RunRecord, run_continual
from .datagen import generate_dataset, index_hash, load_dataset, select_skills, validate_dataset
from .episode import (
    InteractiveUser,
    SkillAgent,
    build_library,
    make_scripted_user,
    run_episode,
    skill_id_for_task,
    write_episode_log,
)
from .jobs import JobManager, JobStatus
from .session_setup import prepare_agent, save_agent_checkpoints

__all__ = [
    "AlignmentReport",
    "ExperimentConfig",
    "InteractiveUser",
    "JobManager",
    "JobStatus",
    "RunRecord",
    "SkillAgent",
    "build_library",
    "generate_dataset",
    "index_hash",
    "load_dataset",
    "make_scripted_user",
    "prepare_agent",
    "run_alignment",
    "run_continual",
    "run_episode",
    "save_agent_checkpoints",
    "select_skills",
    "skill_id_for_task",
    "validate_dataset",
    "write_episode_log",
]
