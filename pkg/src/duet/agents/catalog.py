"""Platform, task and API catalogs.

Shipped as JSON data files under duet/catalogs/ and replaceable at load time,
so deployments can add entries without code changes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional

from ..errors import UnknownApi


@dataclass(frozen=True)
class PlatformDefinition:
    id: str
    name: str
    prompt_description: str


@dataclass(frozen=True)
class TaskDefinition:
    id: str
    name: str
    description: str
    prompt_description: str
    supported_platforms: List[str]
    keywords: List[str] = field(default_factory=list)


@dataclass(frozen=True)
class ApiDefinition:
    api_name: str
    description: str
    platforms: List[str]
    # Concept labels feed the CardView boolean rules (booking/saving/... etc).
    concepts: List[str] = field(default_factory=list)


class Catalog:
    def __init__(self, platforms: List[PlatformDefinition], tasks: List[TaskDefinition],
                 apis: List[ApiDefinition]):
        self.platforms: Dict[str, PlatformDefinition] = {}
        for p in platforms:
            if p.id in self.platforms:
                raise ValueError(f"duplicate platform id {p.id!r}")
            self.platforms[p.id] = p
        self.tasks: Dict[str, TaskDefinition] = {}
        self._task_order: List[str] = []
        for t in tasks:
            if t.id in self.tasks:
                raise ValueError(f"duplicate task id {t.id!r}")
            for pid in t.supported_platforms:
                if pid not in self.platforms:
                    raise ValueError(f"task {t.id!r} names unknown platform {pid!r}")
            self.tasks[t.id] = t
            self._task_order.append(t.id)
        self.apis: Dict[str, ApiDefinition] = {}
        for a in apis:
            if a.api_name in self.apis:
                raise ValueError(f"duplicate api {a.api_name!r}")
            self.apis[a.api_name] = a

    def api(self, api_name: str) -> ApiDefinition:
        definition = self.apis.get(api_name)
        if definition is None:
            raise UnknownApi(api_name)
        return definition

    def has_api(self, api_name: str) -> bool:
        return api_name in self.apis

    def api_listing(self) -> List[Dict[str, str]]:
        """JSON-able list for the available-APIs prompt slot."""
        return [
            {"api_name": a.api_name, "description": a.description}
            for _, a in sorted(self.apis.items())
        ]

    def match_task(self, text: str) -> TaskDefinition:
        """First task whose keyword appears in text; falls back to the first task."""
        lowered = text.lower()
        for task_id in self._task_order:
            task = self.tasks[task_id]
            if any(k.lower() in lowered for k in task.keywords):
                return task
        return self.tasks[self._task_order[0]]


def _read_default(name: str) -> dict:
    return json.loads(resources.files("duet.catalogs").joinpath(name).read_text(encoding="utf-8"))


def load_catalog(platforms_path: Optional[Path] = None, tasks_path: Optional[Path] = None,
                 apis_path: Optional[Path] = None) -> Catalog:
    platforms_doc = (json.loads(Path(platforms_path).read_text(encoding="utf-8"))
                     if platforms_path else _read_default("platforms.json"))
    tasks_doc = (json.loads(Path(tasks_path).read_text(encoding="utf-8"))
                 if tasks_path else _read_default("tasks.json"))
    apis_doc = (json.loads(Path(apis_path).read_text(encoding="utf-8"))
                if apis_path else _read_default("apis.json"))
    return Catalog(
        platforms=[PlatformDefinition(**p) for p in platforms_doc["platforms"]],
        tasks=[TaskDefinition(**t) for t in tasks_doc["tasks"]],
        apis=[ApiDefinition(**a) for a in apis_doc["apis"]],
    )
