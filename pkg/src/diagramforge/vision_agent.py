"""Recovers diagram source code from a rendered image via a vision model."""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Optional

from PIL import Image, UnidentifiedImageError

from .code_agent import extract_code_block
from .errors import ImageDecodeError
from .gateway import ChatTurn, Gateway, ModelProfile
from .prompting import render
from .types import CodeOrigin, DiagramCode, LanguageHint

MAX_EDGE_PX = 4096


@dataclass
class VisionRequest:
    image: bytes
    language_hint: LanguageHint = LanguageHint.AUTO
    style_notes: Optional[str] = None


def _prepare_image(data: bytes) -> bytes:
    """Validates the upload and downscales oversized images for transport."""
    try:
        with Image.open(io.BytesIO(data)) as img:
            img.load()
            if img.format not in ("PNG", "JPEG"):
                raise ImageDecodeError(f"unsupported format {img.format}")
            if max(img.size) <= MAX_EDGE_PX:
                return data
            scale = MAX_EDGE_PX / max(img.size)
            resized = img.convert("RGB").resize(
                (max(1, int(img.width * scale)), max(1, int(img.height * scale))),
                Image.BILINEAR,
            )
            buf = io.BytesIO()
            resized.save(buf, format="PNG")
            return buf.getvalue()
    except (UnidentifiedImageError, OSError) as exc:
        raise ImageDecodeError(f"cannot decode image: {exc}")


def diagram_to_code(req: VisionRequest, model: ModelProfile,
                    gateway: Gateway) -> DiagramCode:
    payload = _prepare_image(req.image)
    prompt = render(
        "diagram_to_code",
        language_hint=req.language_hint.value,
        style_notes=req.style_notes or "",
    )
    reply = gateway.complete_with_images(
        model, [ChatTurn("user", prompt, images=[payload])]
    )
    source, language = extract_code_block(reply)
    return DiagramCode(source, language, CodeOrigin.MODEL)
