"""Thin CLI client for the labeling service.

Every subcommand marshals its arguments into a service request and formats
the response; all actual work happens behind the HTTP endpoints. By default
the requests run against an in-process service instance (same filesystem),
`--server` points them at a remote one instead.

Exit codes: 0 success, 1 validation failure, 2 input error,
3 plugin/protocol error.
"""

import asyncio
import json
import sys

import click
import httpx

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INPUT = 2
EXIT_PLUGIN = 3


class ServiceCall(Exception):
    def __init__(self, exit_code, message):
        super().__init__(message)
        self.exit_code = exit_code


def _request(ctx, method: str, path: str, payload: dict) -> dict:
    server = ctx.obj.get("server")
    try:
        if server:
            with httpx.Client(base_url=server, timeout=600.0) as client:
                response = client.request(method, path, json=payload)
        else:
            from .service import create_app

            async def _call():
                transport = httpx.ASGITransport(app=create_app())
                async with httpx.AsyncClient(transport=transport, base_url="http://glasslab",
                                             timeout=600.0) as client:
                    return await client.request(method, path, json=payload)

            response = asyncio.run(_call())
    except httpx.HTTPError as exc:
        raise ServiceCall(EXIT_INPUT, f"cannot reach service: {exc}")

    if response.status_code >= 400:
        try:
            detail = response.json().get("detail", {})
        except ValueError:
            detail = {}
        error_class = detail.get("error_class", "input_error") if isinstance(detail, dict) else "input_error"
        message = detail.get("message", response.text) if isinstance(detail, dict) else response.text
        code = EXIT_PLUGIN if error_class == "plugin_error" else EXIT_INPUT
        raise ServiceCall(code, f"{error_class}: {message}")
    return response.json()


def _emit(data) -> None:
    click.echo(json.dumps(data, indent=2, sort_keys=True))


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None, help="config JSON file")
@click.option("--seed", type=int, default=None, help="seed for the RANSAC stages")
@click.option("--plugin-verifier", default=None, help="command serving the verifier plugin")
@click.option("--plugin-segmenter", default=None, help="command serving the segmenter plugin")
@click.option("--strict", is_flag=True, help="drop candidates on verifier stage errors")
@click.option("--server", default=None, help="remote service URL (default: run in-process)")
@click.pass_context
def main(ctx, config_path, seed, plugin_verifier, plugin_segmenter, strict, server):
    """Auto-label tabletop glass scenes and compute robot pour targets."""
    ctx.ensure_object(dict)
    ctx.obj.update(
        config_path=config_path, seed=seed, verifier=plugin_verifier,
        segmenter=plugin_segmenter, strict=strict, server=server,
    )


def _run(ctx, fn):
    try:
        sys.exit(fn(ctx))
    except ServiceCall as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(exc.exit_code)


@main.command()
@click.argument("scene_dir", type=click.Path())
@click.option("--output", "-o", "output_coco", type=click.Path(), default=None,
              help="COCO output path (default: <scene>/labels.json)")
@click.option("--camera", "cameras", multiple=True, help="camera(s) to label (default from config)")
@click.pass_context
def label(ctx, scene_dir, output_coco, cameras):
    """Auto-label a scene directory into a COCO document plus run report."""

    def go(ctx):
        out = output_coco or f"{scene_dir}/labels.json"
        data = _request(ctx, "POST", "/label", {
            "scene_dir": scene_dir,
            "output_coco": out,
            "config_path": ctx.obj["config_path"],
            "seed": ctx.obj["seed"],
            "strict": ctx.obj["strict"],
            "verifier_cmd": ctx.obj["verifier"],
            "segmenter_cmd": ctx.obj["segmenter"],
            "cameras": list(cameras) or None,
        })
        _emit({k: data[k] for k in ("annotations", "coco_path", "plugin_failure", "report")})
        return EXIT_PLUGIN if data["plugin_failure"] else EXIT_OK

    _run(ctx, go)


@main.command()
@click.argument("coco_path", type=click.Path())
@click.option("--rig", "rig_path", type=click.Path(), required=True)
@click.option("--from", "from_camera", required=True)
@click.option("--to", "to_camera", required=True)
@click.option("--table", nargs=4, type=float, default=None, help="plane a b c d (default 0 0 1 0)")
@click.option("--output", "-o", "output_coco", type=click.Path(), default=None)
@click.pass_context
def project(ctx, coco_path, rig_path, from_camera, to_camera, table, output_coco):
    """Project a COCO document's labels into another calibrated view."""

    def go(ctx):
        data = _request(ctx, "POST", "/project", {
            "coco_path": coco_path, "rig_path": rig_path,
            "from_camera": from_camera, "to_camera": to_camera,
            "table": list(table) if table else None,
            "output_coco": output_coco,
            "config_path": ctx.obj["config_path"],
        })
        _emit({k: v for k, v in data.items() if k != "document" or v})
        return EXIT_OK

    _run(ctx, go)


@main.command()
@click.argument("proposals_file", type=click.Path())
@click.option("--width", type=int, required=True)
@click.option("--height", type=int, required=True)
@click.option("--kernel-size", "-k", type=int, default=15, show_default=True)
@click.option("--sigma", type=float, default=None, help="default: kernel_size / 6")
@click.option("--output", "-o", "output_container", type=click.Path(), required=True)
@click.option("--png", "output_png", type=click.Path(), default=None)
@click.pass_context
def heatmap(ctx, proposals_file, width, height, kernel_size, sigma, output_container, output_png):
    """Render base-point proposals (JSON rows of x, y, score) to a heatmap."""

    def go(ctx):
        try:
            proposals = json.loads(open(proposals_file).read())
        except (OSError, json.JSONDecodeError) as exc:
            raise ServiceCall(EXIT_INPUT, f"cannot read proposals: {exc}")
        data = _request(ctx, "POST", "/heatmap", {
            "proposals": proposals, "width": width, "height": height,
            "kernel_size": kernel_size, "sigma": sigma,
            "output_container": output_container, "output_png": output_png,
        })
        _emit(data)
        return EXIT_OK

    _run(ctx, go)


@main.command("pour-plan")
@click.argument("coco_path", type=click.Path())
@click.option("--annotation-id", type=int, required=True)
@click.option("--rig", "rig_path", type=click.Path(), required=True)
@click.option("--camera", required=True)
@click.option("--table", nargs=4, type=float, default=None)
@click.pass_context
def pour_plan(ctx, coco_path, annotation_id, rig_path, camera, table):
    """Compute the pour target for one detected glass annotation."""

    def go(ctx):
        data = _request(ctx, "POST", "/pour-plan", {
            "coco_path": coco_path, "annotation_id": annotation_id,
            "rig_path": rig_path, "camera": camera,
            "table": list(table) if table else None,
            "config_path": ctx.obj["config_path"],
        })
        _emit(data)
        return EXIT_OK

    _run(ctx, go)


@main.command()
@click.argument("correspondences", type=click.Path())
@click.option("--rig", "rig_path", type=click.Path(), required=True, help="rig with the initial guess")
@click.option("--camera", required=True)
@click.option("--fix-intrinsics", is_flag=True)
@click.option("--output", "-o", "output_rig", type=click.Path(), default=None)
@click.pass_context
def calibrate(ctx, correspondences, rig_path, camera, fix_intrinsics, output_rig):
    """Refine one camera from u v X Y Z correspondence rows; reports RMS px."""

    def go(ctx):
        data = _request(ctx, "POST", "/calibrate", {
            "correspondences_path": correspondences, "init_rig_path": rig_path,
            "camera": camera, "fix_intrinsics": fix_intrinsics,
            "output_rig_path": output_rig,
        })
        _emit(data)
        return EXIT_OK

    _run(ctx, go)


@main.command()
@click.argument("coco_path", type=click.Path())
@click.pass_context
def validate(ctx, coco_path):
    """Check a COCO file; exits 1 when violations are found."""

    def go(ctx):
        data = _request(ctx, "POST", "/validate", {"coco_path": coco_path})
        _emit(data)
        return EXIT_OK if data["passed"] else EXIT_VALIDATION

    _run(ctx, go)


@main.command()
@click.argument("image_path", type=click.Path())
@click.argument("coco_path", type=click.Path())
@click.option("--output", "-o", "output_path", type=click.Path(), required=True)
@click.option("--image-id", type=int, default=None)
@click.option("--heatmap", "heatmap_path", type=click.Path(), default=None)
@click.pass_context
def overlay(ctx, image_path, coco_path, output_path, image_id, heatmap_path):
    """Render annotation boxes/masks (and optionally a heatmap) onto an image."""

    def go(ctx):
        data = _request(ctx, "POST", "/overlay", {
            "image_path": image_path, "coco_path": coco_path,
            "output_path": output_path, "image_id": image_id,
            "heatmap_path": heatmap_path,
            "config_path": ctx.obj["config_path"],
        })
        _emit(data)
        return EXIT_OK

    _run(ctx, go)


@main.command("synth-scene")
@click.argument("scene_dir", type=click.Path())
@click.pass_context
def synth_scene(ctx, scene_dir):
    """Generate a synthetic 4-glass demo scene (depth + 3 passes + rig)."""

    def go(ctx):
        data = _request(ctx, "POST", "/synth-scene", {
            "scene_dir": scene_dir, "config_path": ctx.obj["config_path"]})
        _emit(data)
        return EXIT_OK

    _run(ctx, go)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8642, show_default=True)
def serve(host, port):
    """Run the labeling service for remote CLI clients."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
