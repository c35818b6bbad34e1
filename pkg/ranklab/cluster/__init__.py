from .features import FILTER_NAMES, filter_features, search_filters
from .kmedoids import ClusterAssignment, k_medoids, silhouette, pairwise_l1
from .fit import (
    ClusteredFit, ClusteringResult, cluster_users, fit_by_cluster, cluster_profile, user_clusters,
    save_clustering, save_clustered_fit, load_clustered_fit,
    CLUSTERS_FILE, MEDOIDS_FILE, PROFILE_FILE,
)
