"""Stereo depth encodings and off-road segmentation tools."""

from ._offroad import (
    CameraRig,
    asw,
    confusion_matrix,
    depth_from_disparity,
    encode,
    encode_angle_with_gravity,
    encode_disparity,
    encode_height,
    encode_normals,
    format_table,
    maxpool_with_indices,
    mean_avg_precision_recall,
    normal_map,
    overall_accuracy,
    point_height,
    read_container,
    render_scene,
    reproject_pixel,
    scene_spec,
    sgbm,
    split_dataset,
    unpool_with_indices,
    write_container,
)

__all__ = [
    "CameraRig",
    "asw",
    "confusion_matrix",
    "depth_from_disparity",
    "encode",
    "encode_angle_with_gravity",
    "encode_disparity",
    "encode_height",
    "encode_normals",
    "format_table",
    "maxpool_with_indices",
    "mean_avg_precision_recall",
    "normal_map",
    "overall_accuracy",
    "point_height",
    "read_container",
    "render_scene",
    "reproject_pixel",
    "scene_spec",
    "sgbm",
    "split_dataset",
    "unpool_with_indices",
    "write_container",
]
