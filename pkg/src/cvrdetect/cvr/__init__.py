from .appearance import APPEARANCE_CHANNELS, extract_appearance_proxy
from .cvrt import (CvrtBadMagic, CvrtTrailingData, CvrtTruncatedPayload,
                   CvrtUnsupportedDtype, CvrtUnsupportedVersion, read_cvrt,
                   write_cvrt)
from .depth import load_depth
from .flow import extract_flow, flow_pair
from .frames import (FrameSequence, ShortVideoWarning, load_frames,
                     save_frames_png, save_frames_raw, segment_clips)
from .resample import area_downsample, trilinear_resize
from .volume import (CLIP_TIME, MODALITIES, ChannelStats, ModalityVolume,
                     compute_stats, normalize_volume)

__all__ = [
    "APPEARANCE_CHANNELS", "extract_appearance_proxy",
    "CvrtBadMagic", "CvrtTrailingData", "CvrtTruncatedPayload",
    "CvrtUnsupportedDtype", "CvrtUnsupportedVersion", "read_cvrt", "write_cvrt",
    "load_depth", "extract_flow", "flow_pair",
    "FrameSequence", "ShortVideoWarning", "load_frames", "save_frames_png",
    "save_frames_raw", "segment_clips",
    "area_downsample", "trilinear_resize",
    "CLIP_TIME", "MODALITIES", "ChannelStats", "ModalityVolume",
    "compute_stats", "normalize_volume",
]
