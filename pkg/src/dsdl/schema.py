"""Schema model: class domains, struct classes, and the builtin inventory.

A ``defs`` section defines two kinds of entities, discriminated by
``$def``: ``class_domain`` (an ordered, possibly hierarchical list of
category names) and ``struct`` (a record schema with fields, optional
parameters, and an optional-field set). Builtin types carry parameter
signatures consumed by the resolver and a value-shape tag consumed by
the validation engine.

Class indices are 1-based throughout: ``COCO[3]`` is the third declared
class. A single index addresses the flat declared list; a dotted index
path (``3.2.5``) walks the hierarchy implied by dotted class names.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .diagnostics import ClassLookupError, Diagnostic, error, warning
from .document import split_definition_key
from .typeexpr import (
    GrammarError,
    TypeExpr,
    parse_sample_type_spec,
    walk_param_refs,
)

_SEGMENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_SEGMENT_ANNOT_RE = re.compile(r"(?P<name>[^\[\]]+)(\[(?P<parent>[^\]]+)\])?")


@dataclass(frozen=True)
class ClassSegment:
    """One dotted-path segment, optionally annotated ``name[parent]``."""

    name: str
    parent: str | None = None


ClassPath = tuple[ClassSegment, ...]


def _path_names(path: ClassPath) -> tuple[str, ...]:
    return tuple(seg.name for seg in path)


def _path_text(path: ClassPath) -> str:
    return ".".join(_path_names(path))


@dataclass(frozen=True)
class ClassRef:
    """A resolved reference to a class within a domain.

    ``index_path`` is the 1-based hierarchical position (one entry per
    path segment); it is empty for references that were parsed from a
    qualified name without a resolvable domain.
    """

    domain: str
    index_path: tuple[int, ...]
    path: str

    def __str__(self) -> str:
        if self.path:
            return f"{self.domain}::{self.path}"
        return f"{self.domain}[{'.'.join(str(i) for i in self.index_path)}]"


@dataclass
class ClassDomain:
    name: str
    classes: list[ClassPath]
    skeleton: list[tuple[int, int]] | None = None
    parents: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.classes)

    def class_names(self) -> list[str]:
        return [_path_text(p) for p in self.classes]


@dataclass
class StructClass:
    name: str
    params: list[str] = field(default_factory=list)
    fields: dict[str, TypeExpr] = field(default_factory=dict)
    optional: frozenset[str] = frozenset()
    parents: list[str] = field(default_factory=list)


Definition = ClassDomain | StructClass


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str  # domain-ref | type-ref | string | bool
    required: bool = True
    default: object = None


@dataclass(frozen=True)
class BuiltinSignature:
    name: str
    params: tuple[ParamSpec, ...]
    shape: str
    media: bool = False


def _sig(name: str, shape: str, *params: ParamSpec, media: bool = False) -> BuiltinSignature:
    return BuiltinSignature(name, params, shape, media)


BUILTINS: dict[str, BuiltinSignature] = {
    s.name: s
    for s in (
        _sig("Bool", "bool"),
        _sig("Int", "int"),
        _sig("Num", "num"),
        _sig("Str", "str"),
        _sig("Coord", "coord"),
        _sig("Coord3D", "coord3d"),
        _sig("Interval", "interval"),
        _sig("BBox", "bbox"),
        _sig("Polygon", "polygon"),
        _sig("Date", "date", ParamSpec("fmt", "string", required=False)),
        _sig("Time", "time", ParamSpec("fmt", "string", required=False)),
        _sig("Label", "label", ParamSpec("dom", "domain-ref")),
        _sig(
            "List",
            "list",
            ParamSpec("etype", "type-ref"),
            ParamSpec("ordered", "bool", required=False, default=False),
        ),
        _sig("Image", "media", media=True),
        _sig("Video", "media", media=True),
        _sig("Audio", "media", media=True),
        _sig("Text", "text", media=True),
        _sig("PointCloud", "media", media=True),
        _sig("LabelMap", "media", ParamSpec("dom", "domain-ref"), media=True),
        _sig("InstanceMap", "media", media=True),
        _sig("Keypoint", "keypoint", ParamSpec("dom", "domain-ref")),
        _sig(
            "RotatedBBox",
            "rotated_bbox",
            ParamSpec("mode", "string"),
            ParamSpec("measure", "string", required=False, default="radian"),
        ),
        _sig("InstanceID", "instance_id"),
        _sig("UniqueID", "unique_id"),
        _sig("ImageShape", "image_shape"),
    )
}

MEDIA_BUILTINS = tuple(name for name, s in BUILTINS.items() if s.media)


@dataclass(frozen=True)
class Provenance:
    source: str | None
    order: int


@dataclass
class DefinitionRegistry:
    """Name -> definition mapping with per-entry provenance."""

    entries: dict[str, Definition] = field(default_factory=dict)
    provenance: dict[str, Provenance] = field(default_factory=dict)

    def get(self, name: str) -> Definition | None:
        return self.entries.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def items(self):
        return self.entries.items()

    def domains(self) -> dict[str, ClassDomain]:
        return {k: v for k, v in self.entries.items() if isinstance(v, ClassDomain)}

    def structs(self) -> dict[str, StructClass]:
        return {k: v for k, v in self.entries.items() if isinstance(v, StructClass)}


def build_definitions(
    raw_defs: dict[str, object],
    *,
    provenance: dict[str, str | None] | None = None,
) -> tuple[DefinitionRegistry, list[Diagnostic]]:
    """Classify raw ``defs`` entries into a :class:`DefinitionRegistry`.

    Malformed entries are reported and skipped; well-formed siblings
    still register, so one bad definition does not hide the rest.
    """
    registry = DefinitionRegistry()
    diags: list[Diagnostic] = []
    for order, (key, body) in enumerate(raw_defs.items()):
        source = (provenance or {}).get(key)
        name, parents = split_definition_key(key)
        path = f"defs/{name}"
        if not isinstance(body, dict):
            diags.append(error("MALFORMED_DEF", path, "definition body must be a mapping", source))
            continue
        kind = body.get("$def")
        if kind == "class_domain":
            entry = _build_class_domain(name, parents, body, path, source, diags)
        elif kind == "struct":
            entry = _build_struct(name, parents, body, path, source, diags)
        elif kind is None:
            diags.append(error("MALFORMED_DEF", path, "definition lacks a $def discriminator", source))
            continue
        else:
            diags.append(
                error("UNKNOWN_DEF_KIND", path, f"unknown $def value {kind!r} (expected struct or class_domain)", source)
            )
            continue
        if entry is None:
            continue
        registry.entries[name] = entry
        registry.provenance[name] = Provenance(source, order)
    return registry, diags


def _build_class_domain(
    name: str,
    parents: list[str],
    body: dict,
    path: str,
    source: str | None,
    diags: list[Diagnostic],
) -> ClassDomain | None:
    classes_raw = body.get("classes")
    if not isinstance(classes_raw, list) or not classes_raw:
        diags.append(error("MALFORMED_DEF", path, "class_domain requires a non-empty classes list", source))
        return None
    for key in body:
        if key not in ("$def", "classes", "skeleton"):
            diags.append(warning("DEF_UNKNOWN_KEY", f"{path}/{key}", f"unrecognized class_domain key {key!r}", source))

    classes: list[ClassPath] = []
    seen: set[tuple[str, ...]] = set()
    for i, item in enumerate(classes_raw):
        if not isinstance(item, str) or not item:
            diags.append(error("MALFORMED_DEF", f"{path}/classes/{i}", "class name must be a non-empty string", source))
            return None
        segments = []
        for seg_text in item.split("."):
            m = _SEGMENT_ANNOT_RE.fullmatch(seg_text)
            if not m:
                diags.append(error("MALFORMED_DEF", f"{path}/classes/{i}", f"malformed class path {item!r}", source))
                return None
            seg_name = m.group("name")
            if not _SEGMENT_RE.fullmatch(seg_name):
                # taken verbatim, but flagged: the convention is to map
                # special characters to underscores in global-info
                diags.append(
                    warning("CLASS_NAME_SYNTAX", f"{path}/classes/{i}", f"class name segment {seg_name!r} is not an identifier", source)
                )
            segments.append(ClassSegment(seg_name, m.group("parent")))
        cls_path = tuple(segments)
        names = _path_names(cls_path)
        if names in seen:
            diags.append(error("MALFORMED_DEF", f"{path}/classes/{i}", f"duplicate class path {_path_text(cls_path)!r}", source))
            return None
        seen.add(names)
        classes.append(cls_path)

    skeleton = None
    skeleton_raw = body.get("skeleton")
    if skeleton_raw is not None:
        if not isinstance(skeleton_raw, list):
            diags.append(error("MALFORMED_DEF", f"{path}/skeleton", "skeleton must be a list of index pairs", source))
            return None
        skeleton = []
        for i, pair in enumerate(skeleton_raw):
            ok = (
                isinstance(pair, list)
                and len(pair) == 2
                and all(isinstance(x, int) and not isinstance(x, bool) for x in pair)
            )
            if not ok:
                diags.append(error("MALFORMED_DEF", f"{path}/skeleton/{i}", f"skeleton entry {pair!r} is not a pair of integers", source))
                return None
            a, b = pair
            if not (1 <= a <= len(classes) and 1 <= b <= len(classes)) or a == b:
                diags.append(
                    error(
                        "MALFORMED_DEF",
                        f"{path}/skeleton/{i}",
                        f"skeleton pair [{a}, {b}] out of range for {len(classes)} classes",
                        source,
                    )
                )
                return None
            skeleton.append((a, b))

    return ClassDomain(name, classes, skeleton, parents)


def _build_struct(
    name: str,
    parents: list[str],
    body: dict,
    path: str,
    source: str | None,
    diags: list[Diagnostic],
) -> StructClass | None:
    fields_raw = body.get("$fields")
    if not isinstance(fields_raw, dict) or not fields_raw:
        diags.append(error("MALFORMED_DEF", path, "struct requires a non-empty $fields mapping", source))
        return None
    for key in body:
        if key not in ("$def", "$fields", "$params", "$optional"):
            diags.append(warning("DEF_UNKNOWN_KEY", f"{path}/{key}", f"unrecognized struct key {key!r}", source))

    params_raw = body.get("$params", [])
    if not isinstance(params_raw, list) or not all(isinstance(p, str) for p in params_raw):
        diags.append(error("MALFORMED_DEF", f"{path}/$params", "$params must be a list of names", source))
        return None

    fields: dict[str, TypeExpr] = {}
    for fname, spec in fields_raw.items():
        fpath = f"{path}/$fields/{fname}"
        try:
            fields[str(fname)] = parse_sample_type_spec(spec)
        except GrammarError as exc:
            diags.append(error(exc.diagnostic.code, fpath, exc.diagnostic.message, source))
            return None

    optional_raw = body.get("$optional", [])
    if not isinstance(optional_raw, list) or not all(isinstance(o, str) for o in optional_raw):
        diags.append(error("MALFORMED_DEF", f"{path}/$optional", "$optional must be a list of field names", source))
        return None
    bad = [o for o in optional_raw if o not in fields]
    if bad:
        diags.append(
            error(
                "OPTIONAL_UNKNOWN_FIELD",
                f"{path}/$optional",
                f"$optional names unknown fields: {', '.join(sorted(bad))}",
                source,
            )
        )
        return None

    declared = set(params_raw)
    for fname, expr in fields.items():
        for ref in walk_param_refs(expr):
            if ref.name not in declared:
                diags.append(
                    error(
                        "UNBOUND_PARAM",
                        f"{path}/$fields/{fname}",
                        f"${ref.name} is not declared in $params",
                        source,
                    )
                )
                return None

    return StructClass(name, list(params_raw), fields, frozenset(optional_raw), parents)


class _Hierarchy:
    """Per-level ordered children implied by dotted class paths."""

    def __init__(self, domain: ClassDomain):
        self.children: dict[tuple[str, ...], list[str]] = {}
        self.leaves = {_path_names(p) for p in domain.classes}
        for cls_path in domain.classes:
            names = _path_names(cls_path)
            for depth in range(len(names)):
                prefix = names[:depth]
                siblings = self.children.setdefault(prefix, [])
                if names[depth] not in siblings:
                    siblings.append(names[depth])

    def index_path_of(self, names: tuple[str, ...]) -> tuple[int, ...]:
        out = []
        for depth in range(len(names)):
            out.append(self.children[names[:depth]].index(names[depth]) + 1)
        return tuple(out)

    def names_at(self, index_path: tuple[int, ...]) -> tuple[str, ...]:
        names: tuple[str, ...] = ()
        for idx in index_path:
            siblings = self.children.get(names, [])
            if not 1 <= idx <= len(siblings):
                raise ClassLookupError(
                    error(
                        "CLASS_INDEX_RANGE",
                        "",
                        f"index {idx} out of range 1..{len(siblings)} at level {len(names) + 1}",
                    )
                )
            names = names + (siblings[idx - 1],)
        return names


_INDEX_PATH_RE = re.compile(r"\d+(\.\d+)*")


def lookup_class(domain: ClassDomain, selector: str | int) -> ClassRef:
    """Resolve a class selector against ``domain``.

    Selectors are dot-delimited name paths (``animal.dog.hound``), a
    bare 1-based integer addressing the flat declared list, or a dotted
    1-based index path (``3.2.5``) walking the hierarchy. Raises
    :class:`ClassLookupError` with ``CLASS_NOT_FOUND`` or
    ``CLASS_INDEX_RANGE``.
    """
    hierarchy = _Hierarchy(domain)
    if isinstance(selector, bool):
        raise ClassLookupError(error("CLASS_NOT_FOUND", "", f"invalid class selector {selector!r}"))
    if isinstance(selector, int):
        return _lookup_flat(domain, hierarchy, selector)
    if _INDEX_PATH_RE.fullmatch(selector):
        parts = tuple(int(p) for p in selector.split("."))
        if len(parts) == 1:
            return _lookup_flat(domain, hierarchy, parts[0])
        names = hierarchy.names_at(parts)
        if names not in hierarchy.leaves:
            raise ClassLookupError(
                error("CLASS_NOT_FOUND", "", f"index path {selector!r} addresses no declared class in {domain.name}")
            )
        return ClassRef(domain.name, parts, ".".join(names))
    return _lookup_name(domain, hierarchy, selector)


def _lookup_flat(domain: ClassDomain, hierarchy: _Hierarchy, index: int) -> ClassRef:
    if not 1 <= index <= len(domain.classes):
        raise ClassLookupError(
            error(
                "CLASS_INDEX_RANGE",
                "",
                f"class index {index} out of range 1..{len(domain.classes)} in {domain.name}",
            )
        )
    names = _path_names(domain.classes[index - 1])
    return ClassRef(domain.name, hierarchy.index_path_of(names), ".".join(names))


def _lookup_name(domain: ClassDomain, hierarchy: _Hierarchy, selector: str) -> ClassRef:
    names = tuple(selector.split("."))
    if names in hierarchy.leaves:
        return ClassRef(domain.name, hierarchy.index_path_of(names), ".".join(names))
    if len(names) == 1:
        # a bare leaf is accepted when it is unambiguous in the domain
        matches = [leaf for leaf in hierarchy.leaves if leaf[-1] == names[0]]
        if len(matches) == 1:
            leaf = matches[0]
            return ClassRef(domain.name, hierarchy.index_path_of(leaf), ".".join(leaf))
        if len(matches) > 1:
            raise ClassLookupError(
                error("CLASS_NOT_FOUND", "", f"class name {selector!r} is ambiguous in {domain.name}")
            )
    raise ClassLookupError(error("CLASS_NOT_FOUND", "", f"no class {selector!r} in {domain.name}"))
